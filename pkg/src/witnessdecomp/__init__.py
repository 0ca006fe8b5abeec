"""Numerical irreducible decomposition of affine algebraic varieties."""

__version__ = "0.1.0"
