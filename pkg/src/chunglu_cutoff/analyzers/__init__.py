"""Closed-form model quantities and entropic statistics."""
