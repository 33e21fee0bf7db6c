"""Spatial-spectrum simulation, interpolation baselines and their verification."""

__version__ = "0.1.0"
