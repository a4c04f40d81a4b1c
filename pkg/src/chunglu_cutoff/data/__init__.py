"""Data models and weight profile sources."""
