"""Numerical lab for the conformable-time tsunami shallow-water system."""

__version__ = '0.1.0'
