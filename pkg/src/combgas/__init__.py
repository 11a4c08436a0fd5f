"""Spectral and thermodynamic toolkit for perturbed graphs and comb lattices."""

__version__ = "0.1.0"
