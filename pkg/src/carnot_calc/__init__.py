"""Numerical toolkit for intrinsic graphs in Carnot groups."""

__version__ = "0.1.0"
