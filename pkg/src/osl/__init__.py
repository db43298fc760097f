"""Sparse domination and mixed weak-type inequalities on finite measure spaces."""

__version__ = "0.1.0"
