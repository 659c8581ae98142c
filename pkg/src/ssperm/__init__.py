"""Permanence analysis of planar S-systems."""

__version__ = "0.1.0"
