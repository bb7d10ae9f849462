"""
Test package for orientnav
"""

__version__ = "1.0.0"
