"""Two-timescale simulator for UAV-assisted mobile edge computing."""

__version__ = "0.0.1"
