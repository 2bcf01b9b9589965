"""Overlapping Schwarz solvers for spatial SEIRD epidemic models."""

__version__ = "0.1.0"
