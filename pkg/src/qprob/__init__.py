"""Conditional expectation and probability for quantum observables."""

__version__ = "0.1.0"
