"""Conformable fractional calculus and Lie symmetry toolkit."""

__version__ = "0.1.0"
