"""Spectral theory, scattering and dispersive dynamics of a dislocated 1D Dirac operator."""

__version__ = "0.1.0"
