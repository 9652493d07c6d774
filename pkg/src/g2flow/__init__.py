"""Numerical laboratory for the Ricci-harmonic flow of G2 and Spin(7) structures."""

__version__ = "0.1.0"
