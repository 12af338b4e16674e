"""Exact solver for the multiple gradual cover location problem."""
__version__ = "0.1.0"
