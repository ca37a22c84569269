"""Entropy of finite-dimensional operator algebras and their dynamics."""

__version__ = "0.1.0"
