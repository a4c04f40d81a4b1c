"""
Entry point for running chunglu_cutoff as a module.

This allows the package to be executed with: python -m chunglu_cutoff
"""

from .main import cli

if __name__ == "__main__":
    cli()
