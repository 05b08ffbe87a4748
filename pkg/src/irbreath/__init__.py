"""Synthetic IR respiration monitoring lab: synthesis, DSP, features, CART models."""

__version__ = "0.1.0"
