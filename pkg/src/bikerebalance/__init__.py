"""Greedy electric-truck rebalancing for station-based bike sharing."""

__version__ = "0.1.0"
