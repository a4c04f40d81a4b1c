"""Digraph storage, sampling, statistics and local structures."""
