"""Coordinated en-route charging and rest planning for electric trucks on a corridor."""

__version__ = "0.1.0"
