"""Grover-search melody composition with white-note rules."""

__version__ = "0.1.0"
