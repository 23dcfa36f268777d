"""Contextual (weak) values and the numerical recovery of Born's rule."""

__version__ = "0.1.0"
