"""Structured radar covariance estimation by unitary-invariant-norm projection."""

__version__ = "0.1.0"
