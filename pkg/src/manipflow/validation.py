"""Feasibility validation of executable actions and multi-criteria selection.

Validation never raises on a failing action: every check lands in the
report, and selection only considers actions whose report passed overall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .config import PipelineConfig, SelectionWeights
from .idf import (ActionHypothesis, ExecutableAction, FramedPose, Pose, SE2,
                  SideHint, _check, register_type)
from .kinematics import IKOptions, ik_seeds, seed_configurations
from .placement import _frame_rotation, _target_in_base, base_collides
from .robot import RobotDescription
from .scene import Scene, resolve_frame

CHECK_NAMES = ("reachability", "handedness", "approachDirection",
               "baseCollision", "pathCollision")


class NoValidAction(Exception):
    def __init__(self, reports: Sequence["ValidationReport"]):
        self.reports = tuple(reports)
        super().__init__(
            f"no action passed validation ({len(self.reports)} reports)")


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    detail: str
    value: float

    def to_dict(self) -> dict:
        return {"pass": self.passed, "detail": self.detail, "value": self.value}

    @classmethod
    def from_dict(cls, d: Mapping) -> "CheckResult":
        return cls(passed=bool(d["pass"]), detail=str(d["detail"]),
                   value=float(d["value"]))


@dataclass(frozen=True)
class ValidationReport:
    action_id: str
    checks: Mapping[str, CheckResult]
    overall: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "checks", dict(self.checks))
        _check(set(self.checks) == set(CHECK_NAMES),
               "report covers the five checks")
        _check(self.overall == all(c.passed for c in self.checks.values()),
               "overall consistent with checks")

    @property
    def id(self) -> str:
        return f"report.{self.action_id}"

    def to_dict(self) -> dict:
        return {
            "actionId": self.action_id,
            "checks": {k: self.checks[k].to_dict() for k in CHECK_NAMES},
            "overall": self.overall,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ValidationReport":
        return cls(action_id=str(d["actionId"]),
                   checks={k: CheckResult.from_dict(v)
                           for k, v in d["checks"].items()},
                   overall=bool(d["overall"]))


register_type(ValidationReport)


def _resolved(scene: Scene, framed: Optional[FramedPose]) -> Optional[Pose]:
    return resolve_frame(scene, framed) if framed is not None else None


def _check_reachability(action: ExecutableAction, scene: Scene,
                        robot: RobotDescription,
                        opts: IKOptions) -> CheckResult:
    worst = 0.0
    for unimanual in action.unimanuals:
        arm = robot.arm_by_name(unimanual.end_effector_name)
        q = arm.home_config()
        for framed in (unimanual.pre_pose, unimanual.execution_pose,
                       unimanual.retract_pose):
            target = _resolved(scene, framed)
            if target is None:
                continue
            local = _target_in_base(action.base_pose, target)
            res = ik_seeds(arm.chain, local,
                           (q, *seed_configurations(arm.chain,
                                                    arm.home_config())), opts)
            q = res.q
            worst = max(worst, res.pos_residual)
            if not res.converged:
                return CheckResult(
                    passed=False,
                    detail=(f"{arm.name}: IK residual {res.pos_residual:.5f} m "
                            f"/ {res.ori_residual:.5f} rad"),
                    value=res.pos_residual)
    return CheckResult(passed=True, detail="all poses reachable", value=worst)


def _check_handedness(action: ExecutableAction, robot: RobotDescription,
                      hypotheses: Optional[Mapping[str, ActionHypothesis]]
                      ) -> CheckResult:
    if hypotheses is None:
        return CheckResult(passed=True,
                           detail="no source hypotheses available", value=0.0)
    sources = action.source_hypothesis_ids
    for i, unimanual in enumerate(action.unimanuals):
        source_id = sources[i] if i < len(sources) else (sources[0] if sources else None)
        hypothesis = hypotheses.get(source_id) if source_id else None
        if hypothesis is None:
            continue
        if hypothesis.side_hint is SideHint.Either:
            continue
        handedness = robot.arm_by_name(unimanual.end_effector_name).handedness
        if handedness is not hypothesis.side_hint:
            return CheckResult(
                passed=False,
                detail=(f"{unimanual.end_effector_name} is {handedness.name} "
                        f"but hypothesis wants {hypothesis.side_hint.name}"),
                value=1.0)
    return CheckResult(passed=True, detail="arms match side hints", value=0.0)


def _check_approach(action: ExecutableAction, scene: Scene,
                    hypotheses: Optional[Mapping[str, ActionHypothesis]],
                    tolerance_deg: float) -> CheckResult:
    if hypotheses is None:
        return CheckResult(passed=True,
                           detail="no source hypotheses available", value=0.0)
    worst = 0.0
    sources = action.source_hypothesis_ids
    for i, unimanual in enumerate(action.unimanuals):
        if unimanual.pre_pose is None:
            continue
        source_id = sources[i] if i < len(sources) else (sources[0] if sources else None)
        hypothesis = hypotheses.get(source_id) if source_id else None
        if hypothesis is None:
            continue
        pre = resolve_frame(scene, unimanual.pre_pose)
        execution = resolve_frame(scene, unimanual.execution_pose)
        actual = geo.vsub(execution.position, pre.position)
        if geo.vnorm(actual) < 1e-9:
            continue
        actual = geo.vunit(actual)
        declared = geo.qrotate(_frame_rotation(scene, hypothesis.pose),
                               hypothesis.approach_axis)
        angle = math.degrees(math.acos(max(-1.0, min(1.0, geo.vdot(actual, declared)))))
        worst = max(worst, angle)
        if angle > tolerance_deg:
            return CheckResult(
                passed=False,
                detail=(f"{unimanual.end_effector_name}: approach drifted "
                        f"{angle:.1f} deg from declared axis"),
                value=angle)
    return CheckResult(passed=True, detail="approach within tolerance",
                       value=worst)


def _check_base(action: ExecutableAction, scene: Scene,
                robot: RobotDescription) -> CheckResult:
    hit = base_collides(scene, action.base_pose.x, action.base_pose.y,
                        robot.footprint_radius)
    return CheckResult(passed=not hit,
                       detail="footprint collides with static geometry"
                       if hit else "footprint clear",
                       value=1.0 if hit else 0.0)


def _check_path(action: ExecutableAction, scene: Scene,
                robot: RobotDescription, samples: int) -> CheckResult:
    static = list(zip(scene.static_box_names, scene.static_boxes))
    for unimanual in action.unimanuals:
        obstacles = list(static)
        for obj in scene.objects:
            if obj.id == unimanual.object_ref:
                continue
            obstacles.append((obj.id, obj.global_box()))
        poses = [_resolved(scene, unimanual.pre_pose),
                 _resolved(scene, unimanual.execution_pose),
                 _resolved(scene, unimanual.retract_pose)]
        for a, b in ((poses[0], poses[1]), (poses[1], poses[2])):
            if a is None or b is None:
                continue
            for k in range(samples + 1):
                t = k / samples
                point = geo.vadd(geo.vscale(a.position, 1.0 - t),
                                 geo.vscale(b.position, t))
                for name, box in obstacles:
                    if box.distance_outside(point) <= robot.wrist_radius:
                        return CheckResult(
                            passed=False,
                            detail=(f"{unimanual.end_effector_name}: wrist "
                                    f"sphere hits {name!r} along the path"),
                            value=box.distance_outside(point))
    return CheckResult(passed=True, detail="path clear", value=0.0)


def validate(action: ExecutableAction, scene: Scene, robot: RobotDescription,
             config: PipelineConfig = PipelineConfig(),
             hypotheses: Optional[Mapping[str, ActionHypothesis]] = None
             ) -> ValidationReport:
    """Run the five feasibility checks; failures are report entries.

    ``hypotheses`` maps hypothesis ids to their objects so the handedness
    and approach-direction checks can compare against the source; without
    it those two checks pass vacuously (noted in their detail).
    """
    checks: Dict[str, CheckResult] = {}
    checks["reachability"] = _check_reachability(action, scene, robot,
                                                 IKOptions())
    checks["handedness"] = _check_handedness(action, robot, hypotheses)
    checks["approachDirection"] = _check_approach(
        action, scene, hypotheses, config.validation.approach_tolerance_deg)
    checks["baseCollision"] = _check_base(action, scene, robot)
    checks["pathCollision"] = _check_path(action, scene, robot,
                                          config.validation.path_samples)
    return ValidationReport(action_id=action.id, checks=checks,
                            overall=all(c.passed for c in checks.values()))


def score(action: ExecutableAction, robot: RobotDescription, scene: Scene,
          weights: SelectionWeights = SelectionWeights(),
          current_base: SE2 = SE2()) -> float:
    """Weighted cost (lower is better): height comfort, side preference,
    base travel. Bimanual actions use the mean execution height and no
    side penalty."""
    heights = [resolve_frame(scene, u.execution_pose).position[2]
               for u in action.unimanuals]
    exec_height = heights[0] if len(heights) == 1 else sum(heights) / len(heights)
    height_cost = abs(exec_height - robot.comfort_height)

    if len(action.unimanuals) > 1 or weights.preferred_side is SideHint.Either:
        side_penalty = 0.0
    else:
        handedness = robot.arm_by_name(
            action.unimanuals[0].end_effector_name).handedness
        side_penalty = 0.0 if handedness is weights.preferred_side else 1.0

    travel = math.hypot(action.base_pose.x - current_base.x,
                        action.base_pose.y - current_base.y)
    return (weights.w_height * height_cost
            + weights.w_side * side_penalty
            + weights.w_travel * travel)


def select_best(actions: Sequence[ExecutableAction],
                reports: Sequence[ValidationReport],
                robot: RobotDescription, scene: Scene,
                weights: SelectionWeights = SelectionWeights(),
                current_base: SE2 = SE2()) -> ExecutableAction:
    """Minimum-score valid action; ties break on the smaller action id.
    The returned copy carries its score."""
    by_id = {r.action_id: r for r in reports}
    valid = [a for a in actions
             if by_id.get(a.id) is not None and by_id[a.id].overall]
    if not valid:
        raise NoValidAction(reports)
    scored = [(score(a, robot, scene, weights, current_base), a.id, a)
              for a in valid]
    scored.sort(key=lambda row: (row[0], row[1]))
    best_score, _, best = scored[0]
    return replace(best, score=best_score)
