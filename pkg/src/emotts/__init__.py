"""Hierarchical emotion-intensity control for speech synthesis."""

__version__ = "0.1.0"
