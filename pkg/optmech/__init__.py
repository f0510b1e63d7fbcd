"""Optimal mechanisms for bi-valued auction settings, certified by dual flows."""

__version__ = "0.1.0"
