"""Compressive-sensing recovery of Larmor precession signals."""

__version__ = "0.1.0"
