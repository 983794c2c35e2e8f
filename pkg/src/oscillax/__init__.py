"""Explicit-constant stationary-phase estimates for band-limited Schrodinger waves."""

__version__ = "0.1.0"
