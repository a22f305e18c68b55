"""Streaming outlier detection with phase-based online k-median clustering."""

__version__ = "0.1.0"
