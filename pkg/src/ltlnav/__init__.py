"""Temporal-logic reactive navigation for a simulated quadruped."""

__version__ = "0.1.0"
