"""Floquet rigidity toolkit for discrete periodic Schrödinger operators."""

__version__ = "0.1.0"
