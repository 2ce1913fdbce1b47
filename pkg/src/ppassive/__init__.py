"""Certify and simulate op-amp circuits that switch and oscillate."""

__version__ = "0.1.0"
