"""Fairlip, provably fair randomized classifiers over a similarity metric."""

__version__ = "0.1.0"
