"""World model and geometric services.

Holds point clusters, known object instances with affordance frames, static
collision boxes and common places; provides Euclidean clustering, PCA box
fitting, the local curvature frame, separating-axis collision queries and
frame resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .idf import (CommonPlace, FramedPose, InvariantViolation, Pose, _check,
                  register_type)


class SceneError(Exception):
    pass


class EmptyCloud(SceneError):
    pass


class TooFewNeighbors(SceneError):
    pass


class UnknownFrame(SceneError):
    pass


class UnknownObject(SceneError):
    pass


class AnchorNotFound(SceneError):
    pass


@dataclass(frozen=True)
class PointCloud:
    """Points in meters, optional per-point segment labels, sensor origin."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    viewpoint: geo.Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int).reshape(-1)
            _check(len(labels) == len(pts), "labels length = points length")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "viewpoint", geo.vec3(self.viewpoint))

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        d: dict = {
            "points": [[float(c) for c in p] for p in self.points],
            "viewpoint": list(self.viewpoint),
        }
        if self.labels is not None:
            d["labels"] = [int(v) for v in self.labels]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PointCloud":
        return cls(points=np.array(d["points"], dtype=float).reshape(-1, 3),
                   labels=np.array(d["labels"], dtype=int) if "labels" in d else None,
                   viewpoint=geo.vec3(d.get("viewpoint", (0.0, 0.0, 0.0))))


@dataclass(frozen=True)
class OOBB:
    """Oriented box: center, right-handed orthonormal axes, full extents
    sorted descending."""

    center: geo.Vec3
    axes: Tuple[geo.Vec3, geo.Vec3, geo.Vec3]
    extents: geo.Vec3

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", geo.vec3(self.center))
        object.__setattr__(self, "axes", tuple(geo.vec3(a) for a in self.axes))
        object.__setattr__(self, "extents", geo.vec3(self.extents))
        a = np.array(self.axes)
        _check(np.allclose(a @ a.T, np.eye(3), atol=1e-9),
               "axes orthonormal within 1e-9")
        _check(np.linalg.det(a) > 0.0, "axes right-handed (det = +1)")
        e = self.extents
        _check(e[0] >= e[1] >= e[2] >= 0.0, "extents sorted descending, >= 0")

    def half_extents(self) -> geo.Vec3:
        return (self.extents[0] / 2.0, self.extents[1] / 2.0, self.extents[2] / 2.0)

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        d = geo.vsub(geo.vec3(point), self.center)
        return all(abs(geo.vdot(d, self.axes[i])) <= self.extents[i] / 2.0 + tol
                   for i in range(3))

    def distance_outside(self, point: Sequence[float]) -> float:
        """Euclidean distance from the point to the box surface; 0 inside."""
        d = geo.vsub(geo.vec3(point), self.center)
        acc = 0.0
        for i in range(3):
            over = abs(geo.vdot(d, self.axes[i])) - self.extents[i] / 2.0
            if over > 0.0:
                acc += over * over
        return math.sqrt(acc)

    def depth_inside(self, point: Sequence[float]) -> float:
        """Penetration depth of a point into the box; 0 when outside."""
        d = geo.vsub(geo.vec3(point), self.center)
        depth = math.inf
        for i in range(3):
            slack = self.extents[i] / 2.0 - abs(geo.vdot(d, self.axes[i]))
            if slack < 0.0:
                return 0.0
            depth = min(depth, slack)
        return depth

    def inflated(self, amount: float) -> "OOBB":
        e = tuple(max(0.0, v + 2.0 * amount) for v in self.extents)
        return OOBB(center=self.center, axes=self.axes, extents=e)  # type: ignore[arg-type]

    def corners(self) -> np.ndarray:
        h = self.half_extents()
        c = np.array(self.center)
        a = np.array(self.axes)
        out = []
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    out.append(c + sx * h[0] * a[0] + sy * h[1] * a[1] + sz * h[2] * a[2])
        return np.array(out)

    def to_dict(self) -> dict:
        return {"center": list(self.center),
                "axes": [list(a) for a in self.axes],
                "extents": list(self.extents)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "OOBB":
        if "axes" in d:
            axes = tuple(geo.vec3(a) for a in d["axes"])
        else:
            axes = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
        return make_oobb(geo.vec3(d["center"]), axes, geo.vec3(d["extents"]))


def make_oobb(center: Sequence[float],
              axes: Sequence[Sequence[float]],
              extents: Sequence[float]) -> OOBB:
    """Build an OOBB from unordered axes/extents: sorts extents descending
    (stable) and flips the last axis if needed for right-handedness."""
    pairs = sorted(zip([geo.vec3(a) for a in axes],
                       [float(e) for e in extents]),
                   key=lambda p: -p[1])
    ax = [p[0] for p in pairs]
    ex = tuple(p[1] for p in pairs)
    if np.linalg.det(np.array(ax)) < 0.0:
        ax[2] = geo.vscale(ax[2], -1.0)
    return OOBB(center=geo.vec3(center), axes=tuple(ax), extents=ex)  # type: ignore[arg-type]


def transform_box(box: OOBB, pose: Pose) -> OOBB:
    """Express a local-frame box in the parent frame of ``pose``."""
    center = geo.vadd(pose.position, geo.qrotate(pose.orientation, box.center))
    axes = tuple(geo.qrotate(pose.orientation, a) for a in box.axes)
    return OOBB(center=center, axes=axes, extents=box.extents)  # type: ignore[arg-type]


@dataclass(frozen=True)
class LocalCurvatureFrame:
    """Surface frame at a clicked point: normal toward the viewpoint,
    principal direction tangent to the surface."""

    origin: geo.Vec3
    normal: geo.Vec3
    principal: geo.Vec3

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", geo.vec3(self.origin))
        object.__setattr__(self, "normal", geo.vec3(self.normal))
        object.__setattr__(self, "principal", geo.vec3(self.principal))
        _check(abs(geo.vnorm(self.normal) - 1.0) <= 1e-9, "|normal| = 1")
        _check(abs(geo.vnorm(self.principal) - 1.0) <= 1e-9, "|principal| = 1")
        _check(abs(geo.vdot(self.normal, self.principal)) <= 1e-9,
               "normal perpendicular to principal")

    @property
    def binormal(self) -> geo.Vec3:
        return geo.vcross(self.normal, self.principal)


@dataclass(frozen=True)
class ObjectInstance:
    """One object in the scene; ``known`` objects have a recognized class and
    prior knowledge may apply to them. ``fixed`` objects (drawers, fixtures)
    cannot be picked up."""

    id: str
    object_class: str
    pose: Pose
    collision_box: OOBB
    known: bool = True
    affordance_frames: Mapping[str, Pose] = field(default_factory=dict)
    support_height: Optional[float] = None
    fixed: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "affordance_frames", dict(self.affordance_frames))

    def global_box(self) -> OOBB:
        return transform_box(self.collision_box, self.pose)

    def moved_to(self, pose: Pose) -> "ObjectInstance":
        return ObjectInstance(id=self.id, object_class=self.object_class,
                              pose=pose, collision_box=self.collision_box,
                              known=self.known,
                              affordance_frames=self.affordance_frames,
                              support_height=self.support_height,
                              fixed=self.fixed)

    def to_dict(self) -> dict:
        d: dict = {
            "id": self.id,
            "class": self.object_class,
            "pose": self.pose.to_dict(),
            "collisionBox": self.collision_box.to_dict(),
            "known": self.known,
            "affordanceFrames": {k: v.to_dict()
                                 for k, v in sorted(self.affordance_frames.items())},
            "fixed": self.fixed,
        }
        if self.support_height is not None:
            d["supportHeight"] = self.support_height
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ObjectInstance":
        return cls(
            id=str(d["id"]),
            object_class=str(d["class"]),
            pose=Pose.from_dict(d["pose"]),
            collision_box=OOBB.from_dict(d["collisionBox"]),
            known=bool(d.get("known", True)),
            affordance_frames={k: Pose.from_dict(v)
                               for k, v in d.get("affordanceFrames", {}).items()},
            support_height=d.get("supportHeight"),
            fixed=bool(d.get("fixed", False)),
        )


@dataclass(frozen=True)
class Scene:
    """Immutable world snapshot; mutation produces a new snapshot."""

    objects: Tuple[ObjectInstance, ...] = ()
    static_boxes: Tuple[OOBB, ...] = ()
    static_box_names: Tuple[str, ...] = ()
    common_places: Tuple[CommonPlace, ...] = ()
    place_assignments: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    cloud: Optional[PointCloud] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "static_boxes", tuple(self.static_boxes))
        names = tuple(self.static_box_names) or tuple(
            f"box{i}" for i in range(len(self.static_boxes)))
        _check(len(names) == len(self.static_boxes),
               "static box names parallel to static boxes")
        object.__setattr__(self, "static_box_names", names)
        object.__setattr__(self, "common_places", tuple(self.common_places))
        object.__setattr__(self, "place_assignments",
                           {k: tuple(v) for k, v in self.place_assignments.items()})
        ids = [o.id for o in self.objects]
        _check(len(ids) == len(set(ids)), "object ids unique")
        by_label: Dict[str, CommonPlace] = {}
        for p in self.common_places:
            _check(p.label not in by_label, f"duplicate common place {p.label!r}")
            by_label[p.label] = p
        for cls_name, labels in self.place_assignments.items():
            prios = []
            for label in labels:
                _check(label in by_label,
                       f"place assignment {cls_name!r} references unknown label {label!r}")
                prios.append(by_label[label].priority)
            _check(len(prios) == len(set(prios)),
                   f"priorities within {cls_name!r} place list are distinct")

    def object_by_id(self, object_id: str) -> ObjectInstance:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise UnknownObject(f"no object with id {object_id!r}")

    def place_by_label(self, label: str) -> Optional[CommonPlace]:
        for p in self.common_places:
            if p.label == label:
                return p
        return None

    def with_object_pose(self, object_id: str, pose: Pose) -> "Scene":
        objs = tuple(o.moved_to(pose) if o.id == object_id else o
                     for o in self.objects)
        if all(o.id != object_id for o in objs):
            raise UnknownObject(f"no object with id {object_id!r}")
        return Scene(objects=objs, static_boxes=self.static_boxes,
                     static_box_names=self.static_box_names,
                     common_places=self.common_places,
                     place_assignments=self.place_assignments, cloud=self.cloud)

    def to_dict(self) -> dict:
        d: dict = {
            "objects": [o.to_dict() for o in self.objects],
            "staticBoxes": [dict(b.to_dict(), name=n)
                            for b, n in zip(self.static_boxes, self.static_box_names)],
            "commonPlaces": [p.to_dict() for p in self.common_places],
            "placeAssignments": {k: list(v)
                                 for k, v in sorted(self.place_assignments.items())},
        }
        if self.cloud is not None:
            d["cloud"] = self.cloud.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scene":
        boxes = []
        names = []
        for i, b in enumerate(d.get("staticBoxes", [])):
            boxes.append(OOBB.from_dict(b))
            names.append(str(b.get("name", f"box{i}")))
        cloud = d.get("cloud")
        if isinstance(cloud, Mapping):
            cloud_val: Optional[PointCloud] = PointCloud.from_dict(cloud)
        else:
            cloud_val = None
        return cls(
            objects=tuple(ObjectInstance.from_dict(o) for o in d.get("objects", [])),
            static_boxes=tuple(boxes),
            static_box_names=tuple(names),
            common_places=tuple(CommonPlace.from_dict(p)
                                for p in d.get("commonPlaces", [])),
            place_assignments={k: tuple(v)
                               for k, v in d.get("placeAssignments", {}).items()},
            cloud=cloud_val,
        )


for _cls in (PointCloud, OOBB, ObjectInstance, Scene):
    register_type(_cls)


# --- clustering ----------------------------------------------------------------

def cluster(cloud: PointCloud, radius: float, min_points: int) -> List[List[int]]:
    """Single-linkage Euclidean clustering.

    Pre-labeled clouds bypass the geometry entirely: the labels define the
    clusters (a perfect-segmenter stand-in) and the size filter does not
    apply. Output is ordered by descending cluster size, then ascending
    smallest point index.
    """
    if len(cloud) == 0:
        raise EmptyCloud("point cloud has no points")
    if cloud.labels is not None:
        groups: Dict[int, List[int]] = {}
        for i, label in enumerate(cloud.labels):
            groups.setdefault(int(label), []).append(i)
        return sorted(groups.values(), key=lambda g: (-len(g), g[0]))

    if radius <= 0.0:
        raise ValueError("radius must be > 0")
    if min_points < 1:
        raise ValueError("min_points must be >= 1")

    pts = cloud.points
    n = len(pts)
    cell = radius
    grid: Dict[Tuple[int, int, int], List[int]] = {}
    keys = np.floor(pts / cell).astype(int)
    for i in range(n):
        grid.setdefault(tuple(keys[i]), []).append(i)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    r2 = radius * radius
    offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1)
               for dz in (-1, 0, 1)]
    for key, members in grid.items():
        for off in offsets:
            neighbor_key = (key[0] + off[0], key[1] + off[1], key[2] + off[2])
            others = grid.get(neighbor_key)
            if others is None or neighbor_key < key:
                continue
            for i in members:
                p = pts[i]
                for j in others:
                    if neighbor_key == key and j <= i:
                        continue
                    d = p - pts[j]
                    if float(d @ d) <= r2:
                        union(i, j)

    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    kept = [g for g in groups.values() if len(g) >= min_points]
    return sorted(kept, key=lambda g: (-len(g), g[0]))


# --- box fitting ---------------------------------------------------------------

_SIGN_TIEBREAK = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def _fix_sign(axis: np.ndarray) -> np.ndarray:
    for ref in _SIGN_TIEBREAK:
        d = float(axis @ np.array(ref))
        if abs(d) > 1e-12:
            return axis if d > 0.0 else -axis
    return axis


def fit_oobb(points: Sequence[Sequence[float]]) -> OOBB:
    """PCA-fit oriented bounding box of a point cluster.

    Axes are covariance eigenvectors ordered by extent (descending), each
    sign-fixed to a nonnegative dot with global +x (then +y, +z on ties);
    right-handedness is restored by flipping the last axis. A single
    repeated point yields a point-sized box with global axes.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyCloud("cannot fit a box to zero points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / max(1, len(pts))
    if float(np.abs(centered).max(initial=0.0)) < 1e-12:
        p = geo.vec3(centroid)
        return OOBB(center=p, axes=_SIGN_TIEBREAK, extents=(0.0, 0.0, 0.0))

    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(eigvals)[::-1]
    axes = [eigvecs[:, i] / np.linalg.norm(eigvecs[:, i]) for i in order]

    # Extents decide the final axis order; PCA order only breaks ties.
    projections = [centered @ a for a in axes]
    spans = [(float(p.max() - p.min()), k) for k, p in enumerate(projections)]
    final = sorted(range(3), key=lambda k: (-spans[k][0], k))
    axes = [_fix_sign(axes[k]) for k in final]
    if np.linalg.det(np.array(axes)) < 0.0:
        axes[2] = -axes[2]

    extents = []
    center = np.array(centroid, dtype=float)
    for a in axes:
        proj = centered @ a
        lo, hi = float(proj.min()), float(proj.max())
        extents.append(hi - lo)
        center = center + 0.5 * (hi + lo) * a
    return OOBB(center=geo.vec3(center),
                axes=tuple(geo.vec3(a) for a in axes),  # type: ignore[arg-type]
                extents=geo.vec3(extents))


def local_curvature_frame(cloud: PointCloud, click: Sequence[float],
                          radius: float = 0.03) -> LocalCurvatureFrame:
    """Averaged surface frame of the neighborhood around a clicked point."""
    if len(cloud) == 0:
        raise EmptyCloud("point cloud has no points")
    click_v = np.asarray(click, dtype=float)
    d = cloud.points - click_v
    mask = (d * d).sum(axis=1) <= radius * radius
    neighbors = cloud.points[mask]
    if len(neighbors) < 3:
        raise TooFewNeighbors(
            f"{len(neighbors)} neighbors within {radius} m, need >= 3")
    origin = neighbors.mean(axis=0)
    centered = neighbors - origin
    cov = centered.T @ centered / len(neighbors)
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    normal = eigvecs[:, 0] / np.linalg.norm(eigvecs[:, 0])
    to_view = np.array(cloud.viewpoint) - origin
    if float(normal @ to_view) < 0.0:
        normal = -normal
    principal = eigvecs[:, 2]
    principal = principal - float(principal @ normal) * normal
    norm = np.linalg.norm(principal)
    if norm < 1e-12:
        raise TooFewNeighbors("degenerate neighborhood: no principal direction")
    principal = principal / norm
    return LocalCurvatureFrame(origin=geo.vec3(origin),
                               normal=geo.vec3(normal),
                               principal=geo.vec3(principal))


# --- collision -----------------------------------------------------------------

def boxes_intersect(a: OOBB, b: OOBB) -> bool:
    """Separating-axis test over the 15 candidate axes; exact for box pairs."""
    A = np.array(a.axes)
    B = np.array(b.axes)
    ha = np.array(a.half_extents())
    hb = np.array(b.half_extents())
    t = np.array(b.center) - np.array(a.center)

    candidates = [A[0], A[1], A[2], B[0], B[1], B[2]]
    for i in range(3):
        for j in range(3):
            cross = np.cross(A[i], B[j])
            n = np.linalg.norm(cross)
            if n > 1e-12:
                candidates.append(cross / n)
    for axis in candidates:
        ra = float(np.abs(A @ axis) @ ha)
        rb = float(np.abs(B @ axis) @ hb)
        if abs(float(t @ axis)) > ra + rb:
            return False
    return True


def separation_margin(a: OOBB, b: OOBB) -> float:
    """Signed margin over the 15 SAT axes: positive = separated by that much,
    negative = overlapping on every axis by at least |margin|."""
    A = np.array(a.axes)
    B = np.array(b.axes)
    ha = np.array(a.half_extents())
    hb = np.array(b.half_extents())
    t = np.array(b.center) - np.array(a.center)
    candidates = [A[0], A[1], A[2], B[0], B[1], B[2]]
    for i in range(3):
        for j in range(3):
            cross = np.cross(A[i], B[j])
            n = np.linalg.norm(cross)
            if n > 1e-12:
                candidates.append(cross / n)
    best = -math.inf
    for axis in candidates:
        ra = float(np.abs(A @ axis) @ ha)
        rb = float(np.abs(B @ axis) @ hb)
        best = max(best, abs(float(t @ axis)) - (ra + rb))
    return best


# --- frames & places -----------------------------------------------------------

def resolve_frame(scene: Scene, framed: FramedPose,
                  tcp_poses: Optional[Mapping[str, Pose]] = None) -> Pose:
    """Resolve a framed pose to the global frame: anchor ∘ local."""
    frame = framed.frame
    local = (framed.pose.position, framed.pose.orientation)
    if frame == "global":
        return framed.pose
    if frame.startswith("object:"):
        obj = scene.object_by_id(frame.split(":", 1)[1])
        anchor = (obj.pose.position, obj.pose.orientation)
    elif frame.startswith("affordance:"):
        ref = frame.split(":", 1)[1]
        object_id, _, name = ref.partition("/")
        obj = scene.object_by_id(object_id)
        if name not in obj.affordance_frames:
            raise UnknownFrame(
                f"object {object_id!r} has no affordance frame {name!r}")
        aff = obj.affordance_frames[name]
        anchor = geo.compose((obj.pose.position, obj.pose.orientation),
                             (aff.position, aff.orientation))
    elif frame.startswith("tcp:"):
        arm = frame.split(":", 1)[1]
        if tcp_poses is None or arm not in tcp_poses:
            raise UnknownFrame(f"tcp frame {arm!r} not resolvable without arm state")
        tcp = tcp_poses[arm]
        anchor = (tcp.position, tcp.orientation)
    else:
        raise UnknownFrame(f"unknown frame {frame!r}")
    pos, orientation = geo.compose(anchor, local)
    return Pose(position=pos, orientation=orientation)


def common_place_volume(scene: Scene, place: CommonPlace) -> OOBB:
    """Global axis-aligned volume of a common place. Relative anchors
    translate the volume with the anchor position; rotation is ignored."""
    axes = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    if place.anchor.kind == "Absolute":
        return make_oobb(place.center, axes, place.extents)
    if place.anchor.kind == "RelativeToInstance":
        try:
            obj = scene.object_by_id(place.anchor.ref or "")
        except UnknownObject as exc:
            raise AnchorNotFound(str(exc)) from exc
    else:  # RelativeToClass: first instance of the class by id order
        matches = sorted((o for o in scene.objects
                          if o.object_class == place.anchor.ref), key=lambda o: o.id)
        if not matches:
            raise AnchorNotFound(
                f"no instance of class {place.anchor.ref!r} in scene")
        obj = matches[0]
    center = geo.vadd(place.center, obj.pose.position)
    return make_oobb(center, axes, place.extents)


@dataclass(frozen=True)
class SupportSurface:
    name: str
    top_z: float
    box: OOBB  # footprint carrier


def support_surfaces(scene: Scene) -> List[SupportSurface]:
    """Horizontal surfaces objects can rest on: static box tops, object
    surfaces that declare a support height, and the ground plane."""
    out: List[SupportSurface] = []
    for name, box in zip(scene.static_box_names, scene.static_boxes):
        top = float(box.corners()[:, 2].max())
        out.append(SupportSurface(name=name, top_z=top, box=box))
    for obj in scene.objects:
        if obj.support_height is not None:
            gbox = obj.global_box()
            out.append(SupportSurface(name=obj.id,
                                      top_z=obj.pose.position[2] + obj.support_height,
                                      box=gbox))
    ground = make_oobb((0.0, 0.0, -0.05),
                       ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
                       (100.0, 100.0, 0.1))
    out.append(SupportSurface(name="ground", top_z=0.0, box=ground))
    return out


def find_support(scene: Scene, object_box: OOBB,
                 tolerance: float = 0.02) -> Optional[SupportSurface]:
    """Surface whose top is within ``tolerance`` below-or-at the box bottom
    and whose footprint contains the box center; closest surface wins."""
    bottom = float(object_box.corners()[:, 2].min())
    cx, cy = object_box.center[0], object_box.center[1]
    best: Optional[SupportSurface] = None
    best_gap = math.inf
    for surf in support_surfaces(scene):
        gap = bottom - surf.top_z
        if abs(gap) > tolerance:
            continue
        corners = surf.box.corners()[:, :2]
        if not (corners[:, 0].min() - 1e-9 <= cx <= corners[:, 0].max() + 1e-9
                and corners[:, 1].min() - 1e-9 <= cy <= corners[:, 1].max() + 1e-9):
            continue
        if abs(gap) < best_gap:
            best_gap = abs(gap)
            best = surf
    return best


# --- files ---------------------------------------------------------------------

def sample_box_surface(box: OOBB, spacing: float) -> np.ndarray:
    """Deterministic grid sampling of all six faces of a box (for synthetic
    clouds standing in for depth sensing)."""
    pts: List[np.ndarray] = []
    c = np.array(box.center)
    a = np.array(box.axes)
    h = np.array(box.half_extents())
    for face_axis in range(3):
        u_axis, v_axis = [k for k in range(3) if k != face_axis]
        nu = max(2, int(round(2 * h[u_axis] / spacing)) + 1)
        nv = max(2, int(round(2 * h[v_axis] / spacing)) + 1)
        us = np.linspace(-h[u_axis], h[u_axis], nu)
        vs = np.linspace(-h[v_axis], h[v_axis], nv)
        for sign in (-1.0, 1.0):
            base = c + sign * h[face_axis] * a[face_axis]
            for u in us:
                for v in vs:
                    pts.append(base + u * a[u_axis] + v * a[v_axis])
    return np.array(pts)


def load_xyz(path: "str | Path") -> PointCloud:
    """Read an ``x y z [label]`` whitespace-separated cloud file."""
    points: List[List[float]] = []
    labels: List[int] = []
    has_labels = False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        points.append([float(parts[0]), float(parts[1]), float(parts[2])])
        if len(parts) > 3:
            has_labels = True
            labels.append(int(parts[3]))
        else:
            labels.append(-1)
    if not points:
        raise EmptyCloud(f"no points in {path}")
    return PointCloud(points=np.array(points),
                      labels=np.array(labels) if has_labels else None)


def save_xyz(path: "str | Path", cloud: PointCloud) -> None:
    lines = []
    for i, p in enumerate(cloud.points):
        row = f"{float(p[0])!r} {float(p[1])!r} {float(p[2])!r}"
        if cloud.labels is not None:
            row += f" {int(cloud.labels[i])}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def load_scene(path: "str | Path") -> Scene:
    """Load a ``*.scene.json`` file; a string ``cloud`` field references an
    ``.xyz`` sidecar (resolved relative to the scene file)."""
    import json

    path = Path(path)
    raw = json.loads(path.read_text())
    cloud_ref = raw.get("cloud")
    scene = Scene.from_dict(raw)
    if isinstance(cloud_ref, str):
        cloud = load_xyz(path.parent / cloud_ref)
        viewpoint = geo.vec3(raw.get("cloudViewpoint", (0.0, 0.0, 0.0)))
        cloud = PointCloud(points=cloud.points, labels=cloud.labels,
                           viewpoint=viewpoint)
        scene = Scene(objects=scene.objects, static_boxes=scene.static_boxes,
                      static_box_names=scene.static_box_names,
                      common_places=scene.common_places,
                      place_assignments=scene.place_assignments, cloud=cloud)
    return scene
