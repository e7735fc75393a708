"""Quantile combination: roster, simple combiners, stacking and the protocol runner."""
