"""Temporally-aware pooling for action spotting."""

__version__ = "0.1.0"
