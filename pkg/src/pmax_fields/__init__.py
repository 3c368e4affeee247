"""Simulation and inference for pMAX random fields."""

__version__ = "0.1.0"
