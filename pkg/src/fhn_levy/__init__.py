"""Lattice FitzHugh-Nagumo systems driven by multiplicative alpha-stable noise."""

__version__ = "0.1.0"
