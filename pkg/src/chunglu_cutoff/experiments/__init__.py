"""Experiment runners behind the CLI commands."""
