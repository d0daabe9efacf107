"""Spectral toolkit for Sturm-Liouville problems with degenerate weights and lambda-dependent boundary conditions."""

__version__ = "0.1.0"
