"""Numerical laboratory for the nonlinear weighted heat equation u_t = Delta_f u + a u ln u."""

__version__ = "0.1.0"
