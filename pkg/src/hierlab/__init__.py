"""Finite-dimensional laboratory for mean-field hierarchies, Liouville equations and de Finetti measures."""

from .space import ModelSpace

__version__ = "0.1.0"

__all__ = ["ModelSpace", "__version__"]
