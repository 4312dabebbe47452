"""Arithmetic Zariski decomposition on P^1 over Z for toric Green functions."""

__version__ = "0.1.0"
