"""Learned voting mechanisms on election bipartite graphs."""

__version__ = "0.1.0"
