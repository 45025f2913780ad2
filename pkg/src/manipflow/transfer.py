"""Learning inputs and motion transfer.

Kinesthetic demonstrations become affordance-frame trajectories; recorded
object motions become frame-relative references; references adapt to new
start poses through exact-interpolation minimum-jerk offset blending with
optional via-points. Handedness transfer mirrors trajectories across the
affordance frame's x-z plane.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import geometry as geo
from .idf import (EndEffectorTrajectory, FramedPose, Pose, SideHint,
                  TrajectoryKeypoint, _check, register_type)

KEYPOINT_FRAME = "tcp:anchor"


class TransferError(Exception):
    pass


class DegenerateDemo(TransferError):
    pass


class TimestampSkew(TransferError):
    pass


class UnsortedViaPoints(TransferError):
    pass


class AnchorConflict(TransferError):
    pass


@dataclass(frozen=True)
class Demonstration:
    """Timed global TCP poses with optional shape events, plus the global
    pose of the affordance frame the motion is relative to."""

    samples: Tuple[Tuple[float, Pose, Optional[str]], ...]
    affordance_frame_global: Pose
    source_robot: str
    source_arm: str
    source_handedness: SideHint

    def __post_init__(self) -> None:
        samples = tuple((float(t), p, s) for t, p, s in self.samples)
        object.__setattr__(self, "samples", samples)
        _check(len(samples) >= 2, "demonstration has >= 2 samples")
        times = [t for t, _, _ in samples]
        _check(all(b > a for a, b in zip(times, times[1:])),
               "times strictly increasing")

    def to_dict(self) -> dict:
        rows = []
        for t, pose, shape in self.samples:
            row: dict = {"t": t, "pose": pose.to_dict()}
            if shape is not None:
                row["shapeEvent"] = shape
            rows.append(row)
        return {
            "samples": rows,
            "affordanceFrameGlobal": self.affordance_frame_global.to_dict(),
            "sourceArm": {"robot": self.source_robot, "armName": self.source_arm,
                          "handedness": self.source_handedness.name},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Demonstration":
        arm = d["sourceArm"]
        return cls(
            samples=tuple((float(r["t"]), Pose.from_dict(r["pose"]),
                           r.get("shapeEvent")) for r in d["samples"]),
            affordance_frame_global=Pose.from_dict(d["affordanceFrameGlobal"]),
            source_robot=str(arm["robot"]),
            source_arm=str(arm["armName"]),
            source_handedness=SideHint[arm["handedness"]],
        )


@dataclass(frozen=True)
class RelativeMotion:
    """Timed poses of one frame expressed in another frame."""

    samples: Tuple[Tuple[float, Pose], ...]
    moving_frame_name: str = "moving"
    reference_frame_name: str = "reference"

    def __post_init__(self) -> None:
        samples = tuple((float(t), p) for t, p in self.samples)
        object.__setattr__(self, "samples", samples)
        _check(len(samples) >= 2, "relative motion has >= 2 samples")
        times = [t for t, _ in samples]
        _check(all(b > a for a, b in zip(times, times[1:])),
               "times strictly increasing")

    def phases(self) -> List[float]:
        t0 = self.samples[0][0]
        t1 = self.samples[-1][0]
        return [(t - t0) / (t1 - t0) for t, _ in self.samples]

    def end_pose(self) -> Pose:
        return self.samples[-1][1]

    def to_dict(self) -> dict:
        return {
            "samples": [{"t": t, "pose": p.to_dict()} for t, p in self.samples],
            "movingFrameName": self.moving_frame_name,
            "referenceFrameName": self.reference_frame_name,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RelativeMotion":
        return cls(
            samples=tuple((float(r["t"]), Pose.from_dict(r["pose"]))
                          for r in d["samples"]),
            moving_frame_name=str(d.get("movingFrameName", "moving")),
            reference_frame_name=str(d.get("referenceFrameName", "reference")),
        )


register_type(Demonstration)
register_type(RelativeMotion)


def load_demonstration(path: "str | Path") -> Demonstration:
    return Demonstration.from_dict(json.loads(Path(path).read_text()))


def save_demonstration(path: "str | Path", demo: Demonstration) -> None:
    from .idf import canonical_json, to_jsonable
    Path(path).write_text(canonical_json(to_jsonable(demo)))


# --- demonstration ingest --------------------------------------------------------

def ingest_demonstration(demo: Demonstration, k: int = 20) -> EndEffectorTrajectory:
    """Resample a demonstration into K keypoints uniform in arc length,
    expressed in the affordance frame; shape events snap to the nearest
    keypoint by time (later events win)."""
    if k < 2:
        raise ValueError("need at least 2 keypoints")
    aff_inv = geo.invert((demo.affordance_frame_global.position,
                          demo.affordance_frame_global.orientation))
    rel: List[Tuple[float, geo.Vec3, geo.Quat]] = []
    for t, pose, _ in demo.samples:
        pos, ori = geo.compose(aff_inv, (pose.position, pose.orientation))
        rel.append((t, pos, ori))

    cumulative = [0.0]
    for (_, p0, _), (_, p1, _) in zip(rel, rel[1:]):
        cumulative.append(cumulative[-1] + geo.vnorm(geo.vsub(p1, p0)))
    length = cumulative[-1]
    if length < 1e-3:
        raise DegenerateDemo(f"total arc length {length:.4f} m < 1 mm")

    keypoint_times: List[float] = []
    keypoints: List[TrajectoryKeypoint] = []
    for j in range(k):
        s = length * j / (k - 1)
        i = min(bisect_right(cumulative, s), len(rel) - 1)
        lo = max(0, i - 1)
        seg = cumulative[i] - cumulative[lo]
        u = 0.0 if seg <= 0.0 else (s - cumulative[lo]) / seg
        t = rel[lo][0] + u * (rel[i][0] - rel[lo][0])
        pos = geo.vadd(geo.vscale(rel[lo][1], 1.0 - u),
                       geo.vscale(rel[i][1], u))
        ori = geo.slerp(rel[lo][2], rel[i][2], u)
        keypoint_times.append(t)
        keypoints.append(TrajectoryKeypoint(
            pose=FramedPose(pose=Pose(position=pos, orientation=ori),
                            frame=KEYPOINT_FRAME),
            phase=j / (k - 1)))

    shapes: dict = {}
    for t, _, shape in demo.samples:
        if shape is None:
            continue
        nearest = min(range(k), key=lambda j: (abs(keypoint_times[j] - t), j))
        shapes[nearest] = shape  # later events overwrite
    final = []
    for j, kp in enumerate(keypoints):
        if j in shapes:
            kp = TrajectoryKeypoint(pose=kp.pose, phase=kp.phase,
                                    hand_shape=shapes[j])
        final.append(kp)
    return EndEffectorTrajectory(keypoints=tuple(final))


# --- handedness mirroring ---------------------------------------------------------

def mirror_trajectory(trajectory: EndEffectorTrajectory) -> EndEffectorTrajectory:
    """Reflect across the affordance frame's x-z plane: y negates, the
    orientation conjugates under the reflection ((w,x,y,z) -> (w,-x,y,-z)).
    Involution: mirroring twice restores the input exactly."""
    out = []
    for kp in trajectory.keypoints:
        p = kp.pose.pose
        mirrored = Pose(
            position=(p.position[0], -p.position[1], p.position[2]),
            orientation=(p.orientation[0], -p.orientation[1],
                         p.orientation[2], -p.orientation[3]))
        out.append(TrajectoryKeypoint(
            pose=FramedPose(pose=mirrored, frame=kp.pose.frame),
            phase=kp.phase, hand_shape=kp.hand_shape,
            finger_joint_values=kp.finger_joint_values))
    return EndEffectorTrajectory(keypoints=tuple(out))


# --- relative motion ---------------------------------------------------------------

TimedPoses = Sequence[Tuple[float, Pose]]


def extract_relative_motion(moving: TimedPoses,
                            reference: "Pose | TimedPoses",
                            moving_name: str = "moving",
                            reference_name: str = "reference",
                            max_skew: float = 0.02) -> RelativeMotion:
    """Express the moving frame in the reference frame per sample:
    rel = ref^-1 ∘ moving. A timed reference pairs by nearest timestamp
    (beyond ``max_skew`` seconds is an error)."""
    moving = [(float(t), p) for t, p in moving]
    _check(len(moving) >= 2, "need >= 2 samples")
    samples: List[Tuple[float, Pose]] = []
    if isinstance(reference, Pose):
        ref_inv = geo.invert((reference.position, reference.orientation))
        for t, pose in moving:
            pos, ori = geo.compose(ref_inv, (pose.position, pose.orientation))
            samples.append((t, Pose(position=pos, orientation=ori)))
    else:
        ref = [(float(t), p) for t, p in reference]
        ref_times = [t for t, _ in ref]
        for t, pose in moving:
            i = bisect_left(ref_times, t)
            best = None
            for j in (i - 1, i):
                if 0 <= j < len(ref):
                    skew = abs(ref_times[j] - t)
                    if best is None or skew < best[0]:
                        best = (skew, j)
            assert best is not None
            if best[0] > max_skew:
                raise TimestampSkew(
                    f"no reference sample within {max_skew * 1e3:.0f} ms of "
                    f"t={t:.3f} (nearest {best[0] * 1e3:.1f} ms)")
            ref_pose = ref[best[1]][1]
            ref_inv = geo.invert((ref_pose.position, ref_pose.orientation))
            pos, ori = geo.compose(ref_inv, (pose.position, pose.orientation))
            samples.append((t, Pose(position=pos, orientation=ori)))
    return RelativeMotion(samples=tuple(samples), moving_frame_name=moving_name,
                          reference_frame_name=reference_name)


# --- via-point adaptation ------------------------------------------------------------

def _min_jerk_blend(u: float) -> float:
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


class _ReferenceCurve:
    """Piecewise-linear/slerp evaluator of a relative motion over phase."""

    def __init__(self, motion: RelativeMotion):
        self.phases = motion.phases()
        self.poses = [p for _, p in motion.samples]

    def at(self, s: float) -> Pose:
        if s <= self.phases[0]:
            return self.poses[0]
        if s >= self.phases[-1]:
            return self.poses[-1]
        i = bisect_right(self.phases, s)
        lo, hi = i - 1, i
        span = self.phases[hi] - self.phases[lo]
        u = 0.0 if span <= 0.0 else (s - self.phases[lo]) / span
        if u == 0.0:
            return self.poses[lo]
        pos = geo.vadd(geo.vscale(self.poses[lo].position, 1.0 - u),
                       geo.vscale(self.poses[hi].position, u))
        ori = geo.slerp(self.poses[lo].orientation, self.poses[hi].orientation, u)
        return Pose(position=pos, orientation=ori)


def adapt_motion(reference: RelativeMotion, new_start: Pose,
                 via_points: Sequence[Tuple[float, Pose]] = (),
                 preserve_end: bool = True) -> RelativeMotion:
    """Adapt a reference motion to a new start pose.

    Anchors are (0, newStart), the via points, and (1, reference end) when
    preserved. Between anchors the pose offset against the reference blends
    with a minimum-jerk profile (zero first derivative at anchors); the
    orientation offset interpolates as a rotation vector. Anchor phases are
    emitted verbatim, so the output passes through every anchor exactly.
    """
    vias = [(float(s), p) for s, p in via_points]
    for s, _ in vias:
        if not (0.0 < s < 1.0):
            raise UnsortedViaPoints(f"via phase {s} outside (0, 1)")
    if any(b <= a for (a, _), (b, _) in zip(vias, vias[1:])):
        if any(b == a for (a, _), (b, _) in zip(vias, vias[1:])):
            raise AnchorConflict("two via points at the same phase")
        raise UnsortedViaPoints("via points not sorted by phase")

    curve = _ReferenceCurve(reference)
    anchors: List[Tuple[float, Pose]] = [(0.0, new_start)]
    anchors.extend(vias)
    if preserve_end:
        anchors.append((1.0, reference.end_pose()))
    phases_only = [s for s, _ in anchors]
    if len(set(phases_only)) != len(phases_only):
        raise AnchorConflict("two anchors at the same phase")

    anchor_offsets: List[Tuple[float, geo.Vec3, geo.Vec3]] = []
    for s, pose in anchors:
        ref = curve.at(s)
        dp = geo.vsub(pose.position, ref.position)
        dq = geo.qmul(pose.orientation, geo.qconj(ref.orientation))
        anchor_offsets.append((s, dp, geo.quat_to_rotvec(dq)))

    def offset(s: float) -> Tuple[geo.Vec3, geo.Vec3]:
        if s <= anchor_offsets[0][0]:
            return anchor_offsets[0][1], anchor_offsets[0][2]
        if s >= anchor_offsets[-1][0]:
            return anchor_offsets[-1][1], anchor_offsets[-1][2]
        for (s0, p0, r0), (s1, p1, r1) in zip(anchor_offsets,
                                              anchor_offsets[1:]):
            if s0 <= s <= s1:
                h = _min_jerk_blend((s - s0) / (s1 - s0))
                dp = geo.vadd(p0, geo.vscale(geo.vsub(p1, p0), h))
                dr = geo.vadd(r0, geo.vscale(geo.vsub(r1, r0), h))
                return dp, dr
        return anchor_offsets[-1][1], anchor_offsets[-1][2]

    t0 = reference.samples[0][0]
    t1 = reference.samples[-1][0]
    anchor_map = {s: pose for s, pose in anchors}
    phase_set = sorted(set(curve.phases) | set(anchor_map))
    out: List[Tuple[float, Pose]] = []
    for s in phase_set:
        t = t0 + s * (t1 - t0)
        if s in anchor_map:
            out.append((t, anchor_map[s]))
            continue
        ref = curve.at(s)
        dp, dr = offset(s)
        pos = geo.vadd(ref.position, dp)
        ori = geo.qnormalize(geo.qmul(geo.rotvec_to_quat(dr), ref.orientation))
        out.append((t, Pose(position=pos, orientation=ori)))
    return RelativeMotion(samples=tuple(out),
                          moving_frame_name=reference.moving_frame_name,
                          reference_frame_name=reference.reference_frame_name)
