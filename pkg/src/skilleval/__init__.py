"""Skill-aligned text-to-image evaluation suite."""

__version__ = "0.1.0"
