"""Function-on-function regression with functional responses."""

__version__ = "0.1.0"
