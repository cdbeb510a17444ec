"""Skew-evolution semiflows: axiom checks and grid certification of exponential dichotomy and trichotomy."""

__version__ = "0.1.0"
