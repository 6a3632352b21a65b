"""Deterministic discrete-event simulator for PTP time distribution over
fiber and long-range wireless links."""

__version__ = "0.1.0"
