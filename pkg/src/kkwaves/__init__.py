"""Traveling-wave bifurcation analysis of the Kerner-Konhauser traffic model."""

__version__ = "0.1.0"
