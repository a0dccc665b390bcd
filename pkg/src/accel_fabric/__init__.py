"""Collective communication cost models and simulators for accelerator fabrics."""

__version__ = "0.1.0"
