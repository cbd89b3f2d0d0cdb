"""Cavity-magnon Kerr simulator and fitting toolkit."""

__version__ = "0.1.0"
