"""Trim-aware SSD utilization and write-amplification laboratory."""

__version__ = "0.1.0"
