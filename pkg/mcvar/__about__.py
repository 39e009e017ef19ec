"""
`mcvar` version file.
"""

__author__ = "Justin Flannery"
__email__ = "justin.flannery@juftin.com"
__application__ = "mcvar"
__version__ = "0.1.0"
