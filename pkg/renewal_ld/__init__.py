"""Finite-time large-deviation toolkit for heavy-tailed renewal counting processes."""

__version__ = "0.1.0"
