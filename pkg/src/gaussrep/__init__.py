"""Gaussian operator phase-space representation for bosonic modes."""

__version__ = "0.1.0"
