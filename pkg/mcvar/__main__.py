"""
mcvar __main__ hook
"""

from mcvar.cli import cli

if __name__ == "__main__":
    cli()
