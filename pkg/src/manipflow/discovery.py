"""Hypothesis discovery strategies: prior-knowledge grasps, oriented-box
grasps on clustered point clouds, common-place placing, operator clicks.

Every strategy is a pure function of (scene, robot, knowledge) and returns
robot-agnostic hypotheses with deterministic ids, so re-running a request on
the same scene yields an identical list.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .config import DiscoveryConfig
from .idf import (ActionHypothesis, ActionType, FramedPose, Pose, SideHint,
                  _check, register_type)
from .robot import RobotDescription
from .scene import (ObjectInstance, Scene, cluster, fit_oobb,
                    common_place_volume, local_curvature_frame)

UP = (0.0, 0.0, 1.0)
DOWN = (0.0, 0.0, -1.0)

DEFAULT_PLACE_LABEL = "freeTable"


class DiscoveryError(Exception):
    pass


class NoCloud(DiscoveryError):
    pass


class NoPlaceKnown(DiscoveryError):
    pass


class ClickTooFarFromSurface(DiscoveryError):
    pass


class UnknownStrategy(DiscoveryError):
    pass


@dataclass(frozen=True)
class GraspEntry:
    """Manually defined grasp for one object class (prior knowledge)."""

    object_class: str
    name: str
    grasp_pose: Pose  # object-local TCP pose
    approach_axis: geo.Vec3  # object-local
    shape_open: str = "open"
    shape_closed: str = "close"
    side_hint: SideHint = SideHint.Either

    def __post_init__(self) -> None:
        object.__setattr__(self, "approach_axis", geo.vec3(self.approach_axis))
        _check(abs(geo.vnorm(self.approach_axis) - 1.0) <= 1e-9,
               "|approachAxis| = 1")

    def to_dict(self) -> dict:
        return {
            "objectClass": self.object_class,
            "name": self.name,
            "graspPose": self.grasp_pose.to_dict(),
            "approachAxis": list(self.approach_axis),
            "shapeOpen": self.shape_open,
            "shapeClosed": self.shape_closed,
            "sideHint": self.side_hint.name,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "GraspEntry":
        return cls(
            object_class=str(d["objectClass"]),
            name=str(d["name"]),
            grasp_pose=Pose.from_dict(d["graspPose"]),
            approach_axis=geo.vec3(d["approachAxis"]),
            shape_open=str(d.get("shapeOpen", "open")),
            shape_closed=str(d.get("shapeClosed", "close")),
            side_hint=SideHint[d.get("sideHint", "Either")],
        )


@dataclass(frozen=True)
class GraspDatabase:
    entries: Tuple[GraspEntry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def classes(self) -> Tuple[str, ...]:
        return tuple(sorted({e.object_class for e in self.entries}))

    def for_class(self, object_class: str) -> Tuple[GraspEntry, ...]:
        return tuple(sorted((e for e in self.entries
                             if e.object_class == object_class),
                            key=lambda e: e.name))

    def to_dict(self) -> dict:
        classes: Dict[str, list] = {}
        for e in self.entries:
            classes.setdefault(e.object_class, []).append(e.to_dict())
        return {"classes": {k: classes[k] for k in sorted(classes)}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "GraspDatabase":
        entries: List[GraspEntry] = []
        for class_name, rows in d.get("classes", {}).items():
            for row in rows:
                row = dict(row)
                row.setdefault("objectClass", class_name)
                entries.append(GraspEntry.from_dict(row))
        return cls(entries=tuple(entries))


register_type(GraspEntry)
register_type(GraspDatabase)


def load_grasp_db(path: "str | Path") -> GraspDatabase:
    return GraspDatabase.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class DiscoveryRequest:
    action_type: ActionType
    scene: Scene
    robot: RobotDescription
    strategy_names: Tuple[str, ...]
    target_object_id: Optional[str] = None
    operator_click: Optional[geo.Vec3] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy_names", tuple(self.strategy_names))
        _check(len(self.strategy_names) >= 1, "strategyNames nonempty")
        for name in self.strategy_names:
            if name not in STRATEGY_ORDER:
                raise UnknownStrategy(f"unregistered strategy {name!r}")


def hypothesis_with_pose(hypothesis: ActionHypothesis,
                         pose: FramedPose) -> ActionHypothesis:
    """Operator edit: same hypothesis, overwritten pose."""
    _check(hypothesis.provenance == "operator",
           "edits only on provenance 'operator' hypotheses")
    return replace(hypothesis, pose=pose)


def _associate_object(scene: Scene, point: geo.Vec3,
                      inflation: float = 0.02) -> Optional[str]:
    # Ground-truth association of a cluster with a scene object (the spec'd
    # stand-in for pose estimation): nearest object whose inflated box holds
    # the point.
    best = None
    best_d = math.inf
    for obj in scene.objects:
        box = obj.global_box().inflated(inflation)
        if box.contains(point):
            d = geo.vnorm(geo.vsub(point, box.center))
            if d < best_d:
                best_d = d
                best = obj.id
    return best


# --- known objects ---------------------------------------------------------

def discover_known(scene: Scene, grasp_db: GraspDatabase,
                   robot: RobotDescription) -> List[ActionHypothesis]:
    """One hypothesis per (known object, database grasp), ordered by object
    id then grasp name."""
    out: List[ActionHypothesis] = []
    for obj in sorted(scene.objects, key=lambda o: o.id):
        if not obj.known:
            continue
        for entry in grasp_db.for_class(obj.object_class):
            out.append(ActionHypothesis(
                id=f"known.{obj.id}.{entry.name}",
                action_type=ActionType.Grasp,
                pose=FramedPose(pose=entry.grasp_pose, frame=f"object:{obj.id}"),
                approach_axis=entry.approach_axis,
                provenance="known",
                confidence=1.0,
                target_object_id=obj.id,
                side_hint=entry.side_hint,
                shape_open=entry.shape_open,
                shape_closed=entry.shape_closed,
            ))
    return out


# --- unknown objects -------------------------------------------------------

def _tcp_orientation(approach: geo.Vec3, closing: geo.Vec3,
                     hand: SideHint) -> geo.Quat:
    # TCP convention: +z = approach direction, +y = finger closing axis.
    # The left-hand variant rolls the wrist 180 degrees about the approach.
    y = closing if hand is SideHint.Right else geo.vscale(closing, -1.0)
    return geo.orientation_from_axes(approach, y)


def _side_from_approach(approach: geo.Vec3, fallback: SideHint) -> SideHint:
    if approach[1] > 1e-9:
        return SideHint.Right
    if approach[1] < -1e-9:
        return SideHint.Left
    return fallback


def discover_unknown(scene: Scene, robot: RobotDescription,
                     config: DiscoveryConfig = DiscoveryConfig()
                     ) -> List[ActionHypothesis]:
    """Cluster the cloud, fit oriented boxes, and emit grasps along the box:
    one top grasp plus two side grasps per large face at quarter points,
    once per handedness.

    A box is graspable iff its second-largest extent fits between the
    gripper's aperture bounds (the fingers close across that extent).
    Boxes touching any static box (inflated 1 cm) count as furniture and
    are skipped.
    """
    if scene.cloud is None:
        raise NoCloud("unknown-object discovery needs a point cloud")
    aperture_min = min(a.end_effector.aperture_min for a in robot.arms)
    aperture_max = max(a.end_effector.aperture_max for a in robot.arms)

    clusters = cluster(scene.cloud, config.cluster_radius,
                       config.cluster_min_points)
    out: List[ActionHypothesis] = []
    for ci, indices in enumerate(clusters):
        box = fit_oobb(scene.cloud.points[indices])
        e_mid = box.extents[1]
        if not (aperture_min <= e_mid <= aperture_max):
            continue
        # furniture: cluster centered inside a static box (objects merely
        # resting on one keep their center above it)
        if any(static.inflated(0.01).contains(box.center)
               for static in scene.static_boxes):
            continue
        target = _associate_object(scene, box.center)
        closing = box.axes[1]
        half = box.half_extents()

        poses: List[Tuple[str, geo.Vec3, geo.Vec3]] = []
        # top grasp: straight down onto the most upward-facing face
        top_sign, top_axis = max(
            ((s, i) for s in (1.0, -1.0) for i in range(3)),
            key=lambda si: si[0] * box.axes[si[1]][2])
        top_center = geo.vadd(box.center,
                              geo.vscale(box.axes[top_axis], top_sign * half[top_axis]))
        poses.append(("top", top_center, DOWN))
        # side grasps on the two largest faces (normal = smallest-extent axis)
        for face_sign, face_tag in ((1.0, "p"), (-1.0, "m")):
            face_center = geo.vadd(box.center,
                                   geo.vscale(box.axes[2], face_sign * half[2]))
            approach = geo.vscale(box.axes[2], -face_sign)
            for quarter_sign, quarter_tag in ((1.0, "a"), (-1.0, "b")):
                p = geo.vadd(face_center,
                             geo.vscale(box.axes[0], quarter_sign * half[0] / 2.0))
                poses.append((f"side{face_tag}{quarter_tag}", p, approach))

        for tag, position, approach in poses:
            axis_closing = closing
            if abs(geo.vdot(axis_closing, approach)) > 1.0 - 1e-6:
                axis_closing = box.axes[2]  # degenerate: closing ∥ approach
            for hand, hand_tag in ((SideHint.Left, "L"), (SideHint.Right, "R")):
                orientation = _tcp_orientation(approach, axis_closing, hand)
                out.append(ActionHypothesis(
                    id=f"unknownOOBB.c{ci}.{tag}.{hand_tag}",
                    action_type=ActionType.Grasp,
                    pose=FramedPose(pose=Pose(position=position,
                                              orientation=orientation),
                                    frame="global"),
                    approach_axis=approach,
                    provenance="unknownOOBB",
                    confidence=config.unknown_confidence,
                    target_object_id=target,
                    side_hint=_side_from_approach(approach, hand),
                ))
    return out


# --- common places -----------------------------------------------------------

def _assigned_places(scene: Scene, obj: ObjectInstance) -> List:
    labels = None
    if obj.known:
        labels = scene.place_assignments.get(obj.object_class)
    if labels is None:
        default = scene.place_by_label(DEFAULT_PLACE_LABEL)
        if default is None:
            raise NoPlaceKnown(
                f"no common place for class {obj.object_class!r} and no "
                f"{DEFAULT_PLACE_LABEL!r} default in scene")
        return [default]
    places = [scene.place_by_label(label) for label in labels]
    return sorted(places, key=lambda p: p.priority)


def target_places(scene: Scene, obj: ObjectInstance) -> List:
    """Prioritized common places an object should end up in."""
    return _assigned_places(scene, obj)


def discover_place(scene: Scene, object_to_place: ObjectInstance,
                   config: DiscoveryConfig = DiscoveryConfig()
                   ) -> List[ActionHypothesis]:
    """Release poses on a grid over each assigned place volume's bottom face,
    with two yaw candidates, ordered by place priority."""
    out: List[ActionHypothesis] = []
    grid = config.place_grid
    obj_box = object_to_place.global_box()
    corners_z = obj_box.corners()[:, 2]
    half_height = float(corners_z.max() - corners_z.min()) / 2.0

    for place in _assigned_places(scene, object_to_place):
        volume = common_place_volume(scene, place)
        corners = volume.corners()
        x_lo, x_hi = float(corners[:, 0].min()), float(corners[:, 0].max())
        y_lo, y_hi = float(corners[:, 1].min()), float(corners[:, 1].max())
        z = float(corners[:, 2].min()) + half_height + config.place_drop_height
        xs = np.linspace(x_lo + (x_hi - x_lo) / 4.0, x_hi - (x_hi - x_lo) / 4.0, grid)
        ys = np.linspace(y_lo + (y_hi - y_lo) / 4.0, y_hi - (y_hi - y_lo) / 4.0, grid)
        confidence = 1.0 / (1.0 + place.priority)
        for r, y in enumerate(ys):
            for c, x in enumerate(xs):
                for yaw_deg in (0, 90):
                    orientation = geo.quat_from_axis_angle(UP, math.radians(yaw_deg))
                    out.append(ActionHypothesis(
                        id=(f"commonPlace.{place.label}.{object_to_place.id}"
                            f".g{r}{c}.y{yaw_deg}"),
                        action_type=ActionType.Place,
                        pose=FramedPose(pose=Pose(position=(float(x), float(y), z),
                                                  orientation=orientation),
                                        frame="global"),
                        approach_axis=DOWN,
                        provenance=f"commonPlace:{place.label}",
                        confidence=confidence,
                        target_object_id=object_to_place.id,
                        side_hint=SideHint.Either,
                    ))
    return out


# --- operator clicks ---------------------------------------------------------

def discover_operator_click(scene: Scene, click: Sequence[float],
                            action_type: ActionType,
                            robot: RobotDescription,
                            config: DiscoveryConfig = DiscoveryConfig()
                            ) -> ActionHypothesis:
    """Seed a hypothesis from a clicked surface point: the local curvature
    frame provides approach (anti-normal) and finger closing (principal)
    directions; the TCP floats half an aperture off the surface."""
    if scene.cloud is None:
        raise NoCloud("operator-click discovery needs a point cloud")
    click_v = geo.vec3(click)
    d = scene.cloud.points - np.array(click_v)
    nearest = float(np.sqrt((d * d).sum(axis=1).min()))
    if nearest > config.click_max_distance:
        raise ClickTooFarFromSurface(
            f"click is {nearest:.3f} m from the nearest surface point "
            f"(max {config.click_max_distance} m)")
    frame = local_curvature_frame(scene.cloud, click_v,
                                  radius=config.click_neighborhood)
    standoff = max(a.end_effector.aperture_max for a in robot.arms) / 2.0
    approach = geo.vscale(frame.normal, -1.0)
    position = geo.vadd(frame.origin, geo.vscale(frame.normal, standoff))
    orientation = geo.orientation_from_axes(approach, frame.principal)
    return ActionHypothesis(
        id=(f"operator.{action_type.name}"
            f".{click_v[0]:.3f}_{click_v[1]:.3f}_{click_v[2]:.3f}"),
        action_type=action_type,
        pose=FramedPose(pose=Pose(position=position, orientation=orientation),
                        frame="global"),
        approach_axis=approach,
        provenance="operator",
        confidence=1.0,
        target_object_id=_associate_object(scene, frame.origin, inflation=0.03),
        side_hint=SideHint.Either,
    )


# --- registry ----------------------------------------------------------------

STRATEGY_ORDER: Tuple[str, ...] = ("known", "unknownOOBB", "commonPlace",
                                   "operator")


def discover(request: DiscoveryRequest, grasp_db: GraspDatabase = GraspDatabase(),
             config: DiscoveryConfig = DiscoveryConfig()) -> List[ActionHypothesis]:
    """Run the requested strategies in registry order and concatenate."""
    out: List[ActionHypothesis] = []
    for name in STRATEGY_ORDER:
        if name not in request.strategy_names:
            continue
        if name == "known":
            out.extend(discover_known(request.scene, grasp_db, request.robot))
        elif name == "unknownOOBB":
            out.extend(discover_unknown(request.scene, request.robot, config))
        elif name == "commonPlace":
            if request.target_object_id is None:
                raise NoPlaceKnown("commonPlace strategy needs a target object")
            obj = request.scene.object_by_id(request.target_object_id)
            out.extend(discover_place(request.scene, obj, config))
        elif name == "operator":
            if request.operator_click is None:
                raise ClickTooFarFromSurface("operator strategy needs a click")
            out.append(discover_operator_click(
                request.scene, request.operator_click, request.action_type,
                request.robot, config))
    ids = [h.id for h in out]
    _check(len(ids) == len(set(ids)), "hypothesis ids unique within a run")
    return out
