"""Bayesian cluster geographically weighted regression."""

__version__ = "0.1.0"
