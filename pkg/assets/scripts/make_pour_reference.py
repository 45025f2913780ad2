#!/usr/bin/env python3
"""Generates the reference pour motion asset (``pour_reference.demo.json``).

Synthetic tilt-and-hold profile of a jug's pour frame relative to a mug's
fill frame: the spout slides in above the rim while the jug tilts about the
rim axis, holds the pouring angle, then tilts back and withdraws. The file
stores the pour frame's global poses plus the fill frame's global pose, the
same layout a recorded human demonstration would use.

    python3 assets/scripts/make_pour_reference.py
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from manipflow import geometry as geo
from manipflow.idf import Pose, SideHint
from manipflow.transfer import Demonstration, save_demonstration

ASSETS = Path(__file__).resolve().parents[1]

DURATION = 4.0
SAMPLES = 81


def smooth(u: float) -> float:
    u = max(0.0, min(1.0, u))
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def ramp(t: float, start: float, end: float) -> float:
    if end <= start:
        return 1.0 if t >= end else 0.0
    return smooth((t - start) / (end - start))


def pour_in_fill(t: float) -> Pose:
    """Relative pose of the pour (spout) frame in the fill frame at time t."""
    slide_in = ramp(t, 0.0, 1.2)
    tilt_up = ramp(t, 1.0, 2.2) - ramp(t, 3.0, 3.8)
    withdraw = ramp(t, 3.2, 4.0)
    y = -0.11 + 0.06 * slide_in - 0.04 * withdraw
    z = 0.15 - 0.06 * slide_in + 0.05 * withdraw
    tilt = 1.5 * tilt_up
    return Pose(position=(0.0, y, z),
                orientation=geo.quat_from_axis_angle((1.0, 0.0, 0.0), tilt))


def main() -> None:
    # fill frame of the recorded session (arbitrary but fixed)
    fill_global = (geo.vec3((0.8, 0.3, 0.75)),
                   geo.quat_from_axis_angle((0, 0, 1), 0.4))
    samples = []
    for i in range(SAMPLES):
        t = DURATION * i / (SAMPLES - 1)
        rel = pour_in_fill(t)
        pos, ori = geo.compose(fill_global, (rel.position, rel.orientation))
        samples.append((t, Pose(position=pos, orientation=ori), None))
    demo = Demonstration(
        samples=tuple(samples),
        affordance_frame_global=Pose(position=fill_global[0],
                                     orientation=fill_global[1]),
        source_robot="human", source_arm="right", source_handedness=SideHint.Right)
    save_demonstration(ASSETS / "pour_reference.demo.json", demo)
    print("wrote", ASSETS / "pour_reference.demo.json")


if __name__ == "__main__":
    main()
