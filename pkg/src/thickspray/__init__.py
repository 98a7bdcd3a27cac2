"""Thick-spray kinetic models: drag kernels, collision operators, a 1D spray solver and verification tools."""

__version__ = "0.1.0"
