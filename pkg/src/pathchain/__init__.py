"""Markov chains on point clouds: row-normalized and path-entropy maximized."""

__version__ = "0.1.0"
