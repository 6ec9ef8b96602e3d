"""Procedural fruit-tree scenes rendered into labeled image datasets."""

__version__ = "0.1.0"
