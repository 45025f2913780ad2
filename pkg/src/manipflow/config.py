"""Pipeline configuration with file overrides (``pipeline.config.json``)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

from .idf import SideHint, _check


@dataclass(frozen=True)
class PlacementWeights:
    """Cost weights of the base-placement refinement."""

    w_ik: float = 10.0
    w_limits: float = 1.0
    w_collision: float = 100.0
    w_manip: float = 1.0
    w_orient: float = 0.5

    def __post_init__(self) -> None:
        _check(min(self.w_ik, self.w_limits, self.w_collision, self.w_manip,
                   self.w_orient) >= 0.0, "placement weights nonnegative")


@dataclass(frozen=True)
class SelectionWeights:
    """Multi-criteria selection weights; lower combined score wins."""

    w_height: float = 1.0
    w_side: float = 0.5
    w_travel: float = 1.0
    preferred_side: SideHint = SideHint.Either  # Either means no preference

    def __post_init__(self) -> None:
        _check(min(self.w_height, self.w_side, self.w_travel) >= 0.0,
               "selection weights nonnegative")


@dataclass(frozen=True)
class PlacementConfig:
    weights: PlacementWeights = field(default_factory=PlacementWeights)
    sample_count: int = 64
    annulus_min: float = 0.4
    annulus_max: float = 1.0
    pre_distance: float = 0.10
    force_threshold: float = 8.0
    bimanual_standoff: float = 0.55
    max_refine_candidates: int = 8
    ik_gate_factor: float = 10.0  # NoIKSolution above factor * posTol


@dataclass(frozen=True)
class ValidationConfig:
    approach_tolerance_deg: float = 30.0
    path_samples: int = 20


@dataclass(frozen=True)
class DiscoveryConfig:
    cluster_radius: float = 0.05
    cluster_min_points: int = 20
    place_grid: int = 3
    place_drop_height: float = 0.01
    click_max_distance: float = 0.05
    click_neighborhood: float = 0.03
    unknown_confidence: float = 0.6


@dataclass(frozen=True)
class ExecutionConfig:
    steps_per_segment: int = 50
    dt: float = 0.02
    contact_inflation: float = 0.005
    rest_tolerance: float = 0.02
    tracking_tolerance_factor: float = 5.0


@dataclass(frozen=True)
class PipelineConfig:
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    selection: SelectionWeights = field(default_factory=SelectionWeights)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    execution: ExecutionConfig = field(default_factory=ExecutionConfig)


def _merge(obj, overrides: Optional[Mapping], mapping: Mapping[str, str]):
    if not overrides:
        return obj
    kwargs = {}
    for key, attr in mapping.items():
        if key in overrides:
            kwargs[attr] = overrides[key]
    return replace(obj, **kwargs) if kwargs else obj


def config_from_dict(raw: Mapping) -> PipelineConfig:
    placement_raw = raw.get("placement", {})
    weights = _merge(PlacementWeights(), placement_raw.get("weights"), {
        "wIK": "w_ik", "wLimits": "w_limits", "wCollision": "w_collision",
        "wManip": "w_manip", "wOrient": "w_orient",
    })
    placement = _merge(PlacementConfig(weights=weights), placement_raw, {
        "sampleCount": "sample_count", "annulusMin": "annulus_min",
        "annulusMax": "annulus_max", "preDistance": "pre_distance",
        "forceThreshold": "force_threshold",
        "bimanualStandoff": "bimanual_standoff",
    })
    selection_raw = dict(raw.get("selection", {}))
    if "preferredSide" in selection_raw:
        selection_raw["preferredSide"] = SideHint[selection_raw["preferredSide"]]
    selection = _merge(SelectionWeights(), selection_raw, {
        "wHeight": "w_height", "wSide": "w_side", "wTravel": "w_travel",
        "preferredSide": "preferred_side",
    })
    validation = _merge(ValidationConfig(), raw.get("validation"), {
        "approachToleranceDeg": "approach_tolerance_deg",
        "pathSamples": "path_samples",
    })
    discovery = _merge(DiscoveryConfig(), raw.get("discovery"), {
        "clusterRadius": "cluster_radius", "clusterMinPoints": "cluster_min_points",
        "placeGrid": "place_grid", "placeDropHeight": "place_drop_height",
        "clickMaxDistance": "click_max_distance",
        "clickNeighborhood": "click_neighborhood",
    })
    execution = _merge(ExecutionConfig(), raw.get("execution"), {
        "stepsPerSegment": "steps_per_segment", "dt": "dt",
        "contactInflation": "contact_inflation",
        "restTolerance": "rest_tolerance",
    })
    return PipelineConfig(placement=placement, selection=selection,
                          validation=validation, discovery=discovery,
                          execution=execution)


def load_config(path: "str | Path | None") -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return config_from_dict(json.loads(Path(path).read_text()))
