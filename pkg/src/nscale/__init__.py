"""Numerical homogenization of Brownian motion in N-scale periodic potentials."""

__version__ = "0.1.0"
