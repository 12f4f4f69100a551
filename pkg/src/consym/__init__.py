"""Symmetry-group analysis for quasi-linear systems of conservation laws."""

__version__ = "0.1.0"
