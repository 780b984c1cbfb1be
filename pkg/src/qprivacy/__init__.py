"""Privacy loss and leakage of two-party classical and quantum protocols."""

__version__ = "0.1.0"
