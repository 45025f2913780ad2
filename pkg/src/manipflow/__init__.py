"""Affordance-based mobile manipulation: typed task descriptions, a
five-step discovery/parameterization/validation/selection/execution
pipeline, a deterministic kinematic simulator and a memory service."""

__version__ = "0.1.0"
