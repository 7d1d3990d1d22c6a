"""Exact combinatorics of d-Catalan trees, shuffle classes and tree-sum inversion."""

__version__ = "0.1.0"
