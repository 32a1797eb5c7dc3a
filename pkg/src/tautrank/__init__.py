"""Holonomic rank of tautological systems on P^n and G(2,N)."""

__version__ = "0.1.0"
