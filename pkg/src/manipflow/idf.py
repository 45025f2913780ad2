"""Interchange data types and their canonical JSON serialization.

Every module of the pipeline communicates exclusively in these types.
Serialization is canonical: lexicographic key order, compact separators,
shortest round-tripping float text, optional fields omitted when unset.
Two structurally equal entities therefore serialize to byte-identical text.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Sequence, Tuple, Type

from .geometry import Quat, Vec3, quat, vec3, vnorm

FORMAT_VERSION = 1

UNIT_TOL = 1e-9

_FRAME_RE = re.compile(
    r"^(global|object:[^/\s]+|affordance:[^/\s]+/[^/\s]+|tcp:[^/\s]+)$"
)


class IdfError(Exception):
    """Base class for interchange-format errors."""


class MalformedText(IdfError):
    """Input text is not well-formed JSON or not an object."""


class UnknownActionType(IdfError):
    """Action type name outside the closed enum."""


class InvariantViolation(IdfError):
    """A type invariant does not hold; the message names the invariant."""


def _check(condition: bool, invariant: str) -> None:
    if not condition:
        raise InvariantViolation(invariant)


def _finite(values: Sequence[float], what: str) -> None:
    _check(all(math.isfinite(v) for v in values), f"{what} must be finite")


class ActionType(Enum):
    Grasp = "Grasp"
    Place = "Place"
    Push = "Push"
    Open = "Open"
    Close = "Close"
    Pour = "Pour"


class SideHint(Enum):
    Left = "Left"
    Right = "Right"
    Either = "Either"


class ActionResult(Enum):
    Success = "Success"
    Failure = "Failure"


class ExecutionPhase(Enum):
    Navigate = "Navigate"
    PrePose = "PrePose"
    Approach = "Approach"
    Trajectory = "Trajectory"
    Retract = "Retract"


@dataclass(frozen=True)
class Pose:
    """Position (m) plus unit quaternion (w, x, y, z)."""

    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "orientation", quat(self.orientation))
        _finite(self.position, "position")
        _finite(self.orientation, "orientation")
        _check(abs(vnorm(self.orientation) - 1.0) <= UNIT_TOL, "|quaternion| = 1")

    def to_dict(self) -> dict:
        return {"position": list(self.position), "orientation": list(self.orientation)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Pose":
        return cls(position=vec3(d["position"]), orientation=quat(d["orientation"]))


IDENTITY_POSE = Pose()


@dataclass(frozen=True)
class FramedPose:
    """A pose plus the identifier of the frame it lives in.

    Frame grammar: ``global``, ``object:<id>``,
    ``affordance:<objectId>/<affordanceName>`` or ``tcp:<armName>``.
    """

    pose: Pose
    frame: str = "global"

    def __post_init__(self) -> None:
        _check(_FRAME_RE.match(self.frame) is not None,
               f"frame identifier matches the frame grammar (got {self.frame!r})")

    def to_dict(self) -> dict:
        return {"pose": self.pose.to_dict(), "frame": self.frame}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FramedPose":
        return cls(pose=Pose.from_dict(d["pose"]), frame=str(d["frame"]))


def _action_type(name: str) -> ActionType:
    try:
        return ActionType[name]
    except KeyError:
        raise UnknownActionType(f"unknown action type {name!r}") from None


def _side_hint(name: str) -> SideHint:
    try:
        return SideHint[name]
    except KeyError:
        raise InvariantViolation(f"unknown side hint {name!r}") from None


@dataclass(frozen=True)
class ActionHypothesis:
    """Robot-agnostic action candidate: an end-effector pose in an abstract
    frame tied to an action type.

    ``side_hint`` and the optional hand-shape names are carried so that
    parameterization and validation can honor handedness and per-grasp
    preshapes without a back-reference into the producing strategy.
    """

    id: str
    action_type: ActionType
    pose: FramedPose
    approach_axis: Vec3
    provenance: str
    confidence: float
    target_object_id: Optional[str] = None
    side_hint: SideHint = SideHint.Either
    shape_open: Optional[str] = None
    shape_closed: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "approach_axis", vec3(self.approach_axis))
        _check(bool(self.id), "id nonempty")
        _check(abs(vnorm(self.approach_axis) - 1.0) <= UNIT_TOL, "|approachAxis| = 1")
        _check(0.0 <= self.confidence <= 1.0, "confidence in [0, 1]")

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "actionType": self.action_type.name,
            "pose": self.pose.to_dict(),
            "approachAxis": list(self.approach_axis),
            "provenance": self.provenance,
            "confidence": self.confidence,
            "sideHint": self.side_hint.name,
        }
        if self.target_object_id is not None:
            d["targetObjectId"] = self.target_object_id
        if self.shape_open is not None:
            d["shapeOpen"] = self.shape_open
        if self.shape_closed is not None:
            d["shapeClosed"] = self.shape_closed
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ActionHypothesis":
        return cls(
            id=str(d["id"]),
            action_type=_action_type(d["actionType"]),
            pose=FramedPose.from_dict(d["pose"]),
            approach_axis=vec3(d["approachAxis"]),
            provenance=str(d["provenance"]),
            confidence=float(d["confidence"]),
            target_object_id=d.get("targetObjectId"),
            side_hint=_side_hint(d.get("sideHint", "Either")),
            shape_open=d.get("shapeOpen"),
            shape_closed=d.get("shapeClosed"),
        )


@dataclass(frozen=True)
class TrajectoryKeypoint:
    """One keypoint of an end-effector trajectory, relative to the execution
    pose frame; may name a hand shape or give raw finger joint values."""

    pose: FramedPose
    phase: float
    hand_shape: Optional[str] = None
    finger_joint_values: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if self.finger_joint_values is not None:
            object.__setattr__(
                self, "finger_joint_values",
                tuple(float(v) for v in self.finger_joint_values))
        _check(0.0 <= self.phase <= 1.0, "phase in [0, 1]")
        _check(self.hand_shape is None or self.finger_joint_values is None,
               "at most one of handShape / fingerJointValues set")

    def to_dict(self) -> dict:
        d: dict = {"pose": self.pose.to_dict(), "phase": self.phase}
        if self.hand_shape is not None:
            d["handShape"] = self.hand_shape
        if self.finger_joint_values is not None:
            d["fingerJointValues"] = list(self.finger_joint_values)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TrajectoryKeypoint":
        fjv = d.get("fingerJointValues")
        return cls(
            pose=FramedPose.from_dict(d["pose"]),
            phase=float(d["phase"]),
            hand_shape=d.get("handShape"),
            finger_joint_values=tuple(float(v) for v in fjv) if fjv is not None else None,
        )


@dataclass(frozen=True)
class EndEffectorTrajectory:
    keypoints: Tuple[TrajectoryKeypoint, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "keypoints", tuple(self.keypoints))
        _check(len(self.keypoints) >= 1, "trajectory has >= 1 keypoint")
        phases = [k.phase for k in self.keypoints]
        _check(all(b > a for a, b in zip(phases, phases[1:])),
               "phase strictly increasing")
        if len(self.keypoints) == 1:
            _check(phases[0] == 1.0, "single-keypoint trajectory has phase = 1")
        else:
            _check(phases[0] == 0.0 and phases[-1] == 1.0,
                   "first keypoint phase = 0, last = 1")

    def shape_names(self) -> Tuple[str, ...]:
        return tuple(k.hand_shape for k in self.keypoints if k.hand_shape is not None)

    def to_dict(self) -> dict:
        return {"keypoints": [k.to_dict() for k in self.keypoints]}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EndEffectorTrajectory":
        return cls(keypoints=tuple(
            TrajectoryKeypoint.from_dict(k) for k in d["keypoints"]))


@dataclass(frozen=True)
class Unimanual:
    """Everything one end-effector needs: pre/execution/retract poses, the
    trajectory executed at the execution pose, and the contact threshold."""

    end_effector_name: str
    execution_pose: FramedPose
    trajectory: EndEffectorTrajectory
    force_threshold: float = 8.0
    pre_pose: Optional[FramedPose] = None
    retract_pose: Optional[FramedPose] = None
    object_ref: Optional[str] = None

    def __post_init__(self) -> None:
        _check(self.force_threshold > 0.0, "forceThreshold > 0")

    def to_dict(self) -> dict:
        d: dict = {
            "endEffectorName": self.end_effector_name,
            "executionPose": self.execution_pose.to_dict(),
            "trajectory": self.trajectory.to_dict(),
            "forceThreshold": self.force_threshold,
        }
        if self.pre_pose is not None:
            d["prePose"] = self.pre_pose.to_dict()
        if self.retract_pose is not None:
            d["retractPose"] = self.retract_pose.to_dict()
        if self.object_ref is not None:
            d["objectRef"] = self.object_ref
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Unimanual":
        return cls(
            end_effector_name=str(d["endEffectorName"]),
            execution_pose=FramedPose.from_dict(d["executionPose"]),
            trajectory=EndEffectorTrajectory.from_dict(d["trajectory"]),
            force_threshold=float(d["forceThreshold"]),
            pre_pose=FramedPose.from_dict(d["prePose"]) if "prePose" in d else None,
            retract_pose=FramedPose.from_dict(d["retractPose"]) if "retractPose" in d else None,
            object_ref=d.get("objectRef"),
        )


@dataclass(frozen=True)
class SE2:
    """Planar base pose: x, y in meters, yaw in radians."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", float(self.yaw))
        _finite((self.x, self.y, self.yaw), "base pose")

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "yaw": self.yaw}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SE2":
        return cls(x=float(d["x"]), y=float(d["y"]), yaw=float(d["yaw"]))


@dataclass(frozen=True)
class ExecutableAction:
    """Robot-specific executable description: base pose plus up to one
    Unimanual per arm of the target robot."""

    id: str
    robot_name: str
    base_pose: SE2
    unimanuals: Tuple[Unimanual, ...]
    source_hypothesis_ids: Tuple[str, ...] = ()
    score: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "unimanuals", tuple(self.unimanuals))
        object.__setattr__(self, "source_hypothesis_ids",
                           tuple(self.source_hypothesis_ids))
        _check(len(self.unimanuals) >= 1, "at least one Unimanual")
        names = [u.end_effector_name for u in self.unimanuals]
        _check(len(names) == len(set(names)),
               "each endEffectorName appears at most once")

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "robotName": self.robot_name,
            "basePose": self.base_pose.to_dict(),
            "unimanuals": [u.to_dict() for u in self.unimanuals],
            "sourceHypothesisIds": list(self.source_hypothesis_ids),
        }
        if self.score is not None:
            d["score"] = self.score
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExecutableAction":
        return cls(
            id=str(d["id"]),
            robot_name=str(d["robotName"]),
            base_pose=SE2.from_dict(d["basePose"]),
            unimanuals=tuple(Unimanual.from_dict(u) for u in d["unimanuals"]),
            source_hypothesis_ids=tuple(str(s) for s in d.get("sourceHypothesisIds", [])),
            score=float(d["score"]) if "score" in d else None,
        )


@dataclass(frozen=True)
class ExecutionEvent:
    """One row of the execution log; ``data`` carries event-specific payload
    such as logged waypoint poses."""

    t: float
    arm: str
    phase: str
    event: str
    data: Optional[Mapping[str, Any]] = None

    def __post_init__(self) -> None:
        _finite((self.t,), "event timestamp")

    def to_dict(self) -> dict:
        d: dict = {"t": self.t, "arm": self.arm, "phase": self.phase, "event": self.event}
        if self.data is not None:
            d["data"] = dict(self.data)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExecutionEvent":
        return cls(t=float(d["t"]), arm=str(d["arm"]), phase=str(d["phase"]),
                   event=str(d["event"]), data=d.get("data"))


@dataclass(frozen=True)
class ExecutedAction:
    """Result and event log of one execution; the episodic-memory record."""

    id: str
    action: ExecutableAction
    result: ActionResult
    events: Tuple[ExecutionEvent, ...]
    started_at: float
    ended_at: float
    failure_phase: Optional[ExecutionPhase] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        _check((self.result is ActionResult.Failure) == (self.failure_phase is not None),
               "result = Failure iff failurePhase present")
        ts = [e.t for e in self.events]
        _check(all(b >= a for a, b in zip(ts, ts[1:])),
               "event timestamps nondecreasing")

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "action": self.action.to_dict(),
            "result": self.result.name,
            "events": [e.to_dict() for e in self.events],
            "startedAt": self.started_at,
            "endedAt": self.ended_at,
        }
        if self.failure_phase is not None:
            d["failurePhase"] = self.failure_phase.name
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExecutedAction":
        result = d["result"]
        _check(result in ActionResult.__members__, f"unknown result {result!r}")
        fp = d.get("failurePhase")
        if fp is not None:
            _check(fp in ExecutionPhase.__members__, f"unknown failure phase {fp!r}")
        return cls(
            id=str(d["id"]),
            action=ExecutableAction.from_dict(d["action"]),
            result=ActionResult[result],
            events=tuple(ExecutionEvent.from_dict(e) for e in d["events"]),
            started_at=float(d["startedAt"]),
            ended_at=float(d["endedAt"]),
            failure_phase=ExecutionPhase[fp] if fp is not None else None,
        )


@dataclass(frozen=True)
class PlaceAnchor:
    """Anchor of a common place: absolute, or relative to a class/instance."""

    kind: str  # "Absolute" | "RelativeToClass" | "RelativeToInstance"
    ref: Optional[str] = None

    def __post_init__(self) -> None:
        _check(self.kind in ("Absolute", "RelativeToClass", "RelativeToInstance"),
               f"unknown anchor kind {self.kind!r}")
        _check((self.kind == "Absolute") == (self.ref is None),
               "relative anchors carry a ref, absolute anchors do not")

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.ref is not None:
            d["ref"] = self.ref
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PlaceAnchor":
        return cls(kind=str(d["kind"]), ref=d.get("ref"))


@dataclass(frozen=True)
class CommonPlace:
    """Prioritized volumetric region grounding a symbolic place label."""

    label: str
    center: Vec3
    extents: Vec3
    anchor: PlaceAnchor = field(default_factory=lambda: PlaceAnchor("Absolute"))
    priority: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", vec3(self.center))
        object.__setattr__(self, "extents", vec3(self.extents))
        _check(all(e > 0.0 for e in self.extents), "extents > 0 componentwise")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "volume": {"center": list(self.center), "extents": list(self.extents)},
            "anchor": self.anchor.to_dict(),
            "priority": self.priority,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "CommonPlace":
        vol = d["volume"]
        return cls(
            label=str(d["label"]),
            center=vec3(vol["center"]),
            extents=vec3(vol["extents"]),
            anchor=PlaceAnchor.from_dict(d["anchor"]),
            priority=int(d["priority"]),
        )


# --- registry + canonical text ------------------------------------------------

TYPE_REGISTRY: "dict[str, Type]" = {}


def register_type(cls: Type) -> Type:
    """Register an entity class (with to_dict/from_dict) for serialization."""
    TYPE_REGISTRY[cls.__name__] = cls
    return cls


for _cls in (Pose, FramedPose, ActionHypothesis, TrajectoryKeypoint,
             EndEffectorTrajectory, Unimanual, ExecutableAction, ExecutedAction,
             CommonPlace):
    register_type(_cls)


def to_jsonable(entity: Any) -> dict:
    """Tagged plain-dict form of a registered entity."""
    name = type(entity).__name__
    if name not in TYPE_REGISTRY:
        raise InvariantViolation(f"unregistered entity type {name!r}")
    d = entity.to_dict()
    d["formatVersion"] = FORMAT_VERSION
    d["type"] = name
    return d


def from_jsonable(d: Mapping[str, Any], expected_type: "str | Type | None" = None) -> Any:
    """Rebuild an entity from its tagged dict form, validating invariants."""
    if not isinstance(d, Mapping):
        raise MalformedText("top-level JSON value must be an object")
    name = d.get("type")
    if expected_type is not None:
        expected_name = expected_type if isinstance(expected_type, str) else expected_type.__name__
        if name is not None and name != expected_name:
            raise InvariantViolation(
                f"type tag {name!r} does not match expected {expected_name!r}")
        name = expected_name
    if name is None:
        raise MalformedText("missing type tag and no expected type given")
    cls = TYPE_REGISTRY.get(str(name))
    if cls is None:
        raise InvariantViolation(f"unregistered entity type {name!r}")
    try:
        return cls.from_dict(d)
    except IdfError:
        raise
    except (KeyError, IndexError) as exc:
        raise InvariantViolation(f"missing required field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(str(exc)) from exc


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"),
                      allow_nan=False, ensure_ascii=False)


def serialize(entity: Any) -> str:
    """Canonical UTF-8 JSON text of an entity; byte-deterministic."""
    return canonical_json(to_jsonable(entity))


def deserialize(text: str, expected_type: "str | Type | None" = None) -> Any:
    """Parse canonical text back into an entity, enforcing all invariants."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedText(f"not well-formed JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedText("top-level JSON value must be an object")
    return from_jsonable(raw, expected_type)
