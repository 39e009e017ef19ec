"""
Bundled reference tables
"""
