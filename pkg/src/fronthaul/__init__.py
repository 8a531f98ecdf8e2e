"""Dimension-reduction fronthaul compression for uplink distributed MIMO."""

__version__ = "0.1.0"
