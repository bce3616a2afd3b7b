"""Symbolic-numeric verification toolkit for the Novikov equation."""

__version__ = "0.1.0"
