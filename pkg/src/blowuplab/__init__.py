"""Numerical study of self-similar blow-up for u_tt - u_xx = (u_t)^2."""

__version__ = "0.1.0"
