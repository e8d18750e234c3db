"""Batch hallucination detection and evaluation toolkit."""

__version__ = "0.1.0"
