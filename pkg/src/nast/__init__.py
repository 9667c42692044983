"""Nonlinear activation scattering of stationary Gaussian processes."""

__version__ = "0.1.0"
