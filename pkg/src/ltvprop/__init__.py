"""Iterated-integral propagators for linear time-varying ODEs and matrix Riccati equations."""

__version__ = "0.1.0"
