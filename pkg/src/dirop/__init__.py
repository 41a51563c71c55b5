"""Directional tangent and normal objects and second-order optimality checks."""

__version__ = "0.1.0"
