"""Linked-Data video annotation store with federated concept search."""

__version__ = "0.1.0"
