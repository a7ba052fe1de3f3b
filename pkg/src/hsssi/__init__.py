"""Occupation-time functionals of heavy-tailed particle systems and their stable limits."""
__version__ = "0.1.0"
