"""Radial Dirac scattering in two dimensions and the Levinson counting rule."""

__version__ = "0.1.0"
