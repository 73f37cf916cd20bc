"""Worst-case attacker-group search against First Contact DTN routing."""

__version__ = "0.1.0"
