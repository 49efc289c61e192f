"""Long-range first-passage percolation lab."""

__version__ = "0.1.0"
