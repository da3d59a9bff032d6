"""Numerical toolkit for fractional Sobolev and Besov spaces on periodic grids."""
__version__ = "0.1.0"
