#!/usr/bin/env python3
"""Regenerates all synthetic assets: robot files, scenes, point clouds,
grasp database, the drawer demonstration, scenario files and click files.

Everything is deterministic; run from the repository root:

    python3 assets/scripts/make_assets.py
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from manipflow import geometry as geo
from manipflow.discovery import GraspDatabase, GraspEntry
from manipflow.idf import Pose, SideHint, canonical_json
from manipflow.kinematics import Joint, JointType, SerialChain
from manipflow.robot import Arm, EndEffector, RobotDescription
from manipflow.scene import (OOBB, ObjectInstance, Scene, load_scene,
                             make_oobb, sample_box_surface, save_xyz,
                             PointCloud)
from manipflow.transfer import Demonstration, save_demonstration

ASSETS = Path(__file__).resolve().parents[1]

IDENTITY_AXES = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
TOP_GRASP_ORI = geo.orientation_from_axes((0.0, 0.0, -1.0), (0.0, 1.0, 0.0))


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- robots -----------------------------------------------------------------

def humanoid_arm(side: SideHint, finger_dof: int) -> Arm:
    sgn = 1.0 if side is SideHint.Left else -1.0
    joints = (
        Joint("torso", JointType.Prismatic, Pose(), (0, 0, 1), (-0.1, 0.35)),
        Joint("shoulder_yaw", JointType.Revolute,
              Pose(position=(0.05, sgn * 0.20, 0.30)), (0, 0, 1), (-2.8, 2.8)),
        Joint("shoulder_pitch", JointType.Revolute, Pose(), (0, 1, 0),
              (-2.3, 2.3)),
        Joint("upper_roll", JointType.Revolute, Pose(position=(0.28, 0, 0)),
              (1, 0, 0), (-2.3, 2.3)),
        Joint("elbow", JointType.Revolute, Pose(position=(0.02, 0, 0)),
              (0, 1, 0), (-2.4, 2.4)),
        Joint("forearm_roll", JointType.Revolute, Pose(position=(0.25, 0, 0)),
              (1, 0, 0), (-2.4, 2.4)),
        Joint("wrist_pitch", JointType.Revolute, Pose(position=(0.03, 0, 0)),
              (0, 1, 0), (-1.9, 1.9)),
        Joint("wrist_yaw", JointType.Revolute, Pose(), (0, 0, 1), (-2.8, 2.8)),
    )
    tcp_ori = geo.quat_from_axis_angle((0, 1, 0), math.pi / 2)
    chain = SerialChain(
        f"{'left' if side is SideHint.Left else 'right'}_arm", joints,
        base=Pose(position=(0.0, 0.0, 0.9)),
        tcp=Pose(position=(0.12, 0, 0), orientation=tcp_ori))
    shapes = {
        "open": tuple(0.0 for _ in range(finger_dof)),
        "close": tuple(1.4 for _ in range(finger_dof)),
        "hook": tuple(1.0 if i == 0 else 0.4 for i in range(finger_dof)),
    }
    ee = EndEffector(kind="fiveFinger", aperture_min=0.01, aperture_max=0.10,
                     shape_table=shapes)
    home = (0.1, sgn * 0.3, 0.4, 0.0, 1.0, 0.0, 0.4, 0.0)
    return Arm(chain=chain, handedness=side, end_effector=ee, home=home)


def make_helper(name: str, finger_dof: int) -> RobotDescription:
    return RobotDescription(
        name=name,
        arms=(humanoid_arm(SideHint.Left, finger_dof),
              humanoid_arm(SideHint.Right, finger_dof)),
        footprint_radius=0.28, comfort_height=0.9, wrist_radius=0.04,
        manipulability_block="full")


def make_rover() -> RobotDescription:
    # spherical 3-axis wrist after the elbow for full orientation coverage
    joints = (
        Joint("column", JointType.Prismatic, Pose(), (0, 0, 1), (-0.05, 0.3)),
        Joint("shoulder_yaw", JointType.Revolute,
              Pose(position=(0.05, 0.0, 0.25)), (0, 0, 1), (-2.8, 2.8)),
        Joint("shoulder_pitch", JointType.Revolute, Pose(), (0, 1, 0),
              (-2.3, 2.3)),
        Joint("elbow", JointType.Revolute, Pose(position=(0.30, 0, 0)),
              (0, 1, 0), (-2.4, 2.4)),
        Joint("forearm_roll", JointType.Revolute, Pose(position=(0.02, 0, 0)),
              (1, 0, 0), (-2.8, 2.8)),
        Joint("wrist_pitch", JointType.Revolute, Pose(position=(0.25, 0, 0)),
              (0, 1, 0), (-2.0, 2.0)),
        Joint("wrist_roll", JointType.Revolute, Pose(), (1, 0, 0),
              (-2.8, 2.8)),
    )
    tcp_ori = geo.quat_from_axis_angle((0, 1, 0), math.pi / 2)
    chain = SerialChain("arm", joints, base=Pose(position=(0.0, 0.0, 0.55)),
                        tcp=Pose(position=(0.10, 0, 0), orientation=tcp_ori))
    ee = EndEffector(kind="parallel", aperture_min=0.0, aperture_max=0.09,
                     shape_table={"open": (0.045,), "close": (0.0,)})
    arm = Arm(chain=chain, handedness=SideHint.Right, end_effector=ee,
              home=(0.1, 0.0, 0.1, 0.5, 0.0, 0.5, 0.0))
    return RobotDescription(name="roverOne", arms=(arm,),
                            footprint_radius=0.30, comfort_height=0.75,
                            wrist_radius=0.04, manipulability_block="full")


# --- grasp database -----------------------------------------------------------

def top_grasp(object_class: str, height: float) -> GraspEntry:
    return GraspEntry(object_class=object_class, name="top",
                      grasp_pose=Pose(position=(0, 0, height / 2),
                                      orientation=TOP_GRASP_ORI),
                      approach_axis=(0, 0, -1))


def make_grasp_db() -> GraspDatabase:
    side_ori = geo.orientation_from_axes((1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    return GraspDatabase(entries=(
        top_grasp("mustard", 0.19),
        top_grasp("bio-milk", 0.20),
        top_grasp("apple-tea", 0.15),
        top_grasp("spraybottle", 0.22),
        top_grasp("screwbox", 0.07),
        top_grasp("sponge", 0.05),
        GraspEntry(object_class="jug", name="side",
                   grasp_pose=Pose(position=(-0.04, 0.0, 0.02),
                                   orientation=side_ori),
                   approach_axis=(1.0, 0.0, 0.0)),
    ))


# --- scenes -------------------------------------------------------------------

def box(cx, cy, cz, ex, ey, ez) -> dict:
    return {"center": [cx, cy, cz], "extents": [ex, ey, ez]}


def object_entry(oid, cls, x, y, z, ex, ey, ez, known=True, extra=None) -> dict:
    d = {
        "id": oid, "class": cls, "known": known,
        "pose": Pose(position=(x, y, z)).to_dict(),
        "collisionBox": {"center": [0, 0, 0], "extents": [ex, ey, ez]},
    }
    if extra:
        d.update(extra)
    return d


def table_clearing_scene() -> dict:
    table_top = 0.72
    objects = [
        object_entry("mustard1", "mustard", 1.32, 0.45, table_top + 0.095,
                     0.06, 0.058, 0.19),
        object_entry("biomilk1", "bio-milk", 1.40, 0.30, table_top + 0.10,
                     0.07, 0.07, 0.20),
        object_entry("appletea1", "apple-tea", 1.32, 0.15, table_top + 0.075,
                     0.065, 0.045, 0.15),
        object_entry("spray1", "spraybottle", 1.40, 0.0, table_top + 0.11,
                     0.08, 0.06, 0.22),
        object_entry("screwbox1", "screwbox", 1.32, -0.15, table_top + 0.035,
                     0.18, 0.09, 0.07),
        object_entry("sponge1", "sponge", 1.40, -0.30, table_top + 0.025,
                     0.12, 0.08, 0.05),
        object_entry("towel1", "towel", 1.32, -0.45, table_top + 0.025,
                     0.18, 0.09, 0.05, known=False),
    ]
    return {
        "formatVersion": 1,
        "objects": objects,
        "staticBoxes": [
            dict(box(1.5, 0.0, 0.36, 0.8, 1.2, 0.72), name="table"),
            dict(box(-1.6, 1.2, 0.425, 0.6, 1.6, 0.85), name="countertop"),
            dict(box(-1.6, -1.2, 0.45, 0.6, 1.2, 0.90), name="workbench"),
            dict(box(-1.6, 0.0, 0.40, 0.6, 0.6, 0.80), name="sink"),
            dict(box(0.0, 2.2, 0.36, 0.8, 0.8, 0.72), name="freeTableTop"),
        ],
        "commonPlaces": [
            {"label": "countertop", "volume": {"center": [-1.45, 1.2, 1.05],
                                               "extents": [0.3, 1.4, 0.4]},
             "anchor": {"kind": "Absolute"}, "priority": 0},
            {"label": "workbench", "volume": {"center": [-1.45, -1.2, 1.1],
                                              "extents": [0.3, 1.0, 0.4]},
             "anchor": {"kind": "Absolute"}, "priority": 0},
            {"label": "sink", "volume": {"center": [-1.45, 0.0, 1.0],
                                         "extents": [0.3, 0.4, 0.4]},
             "anchor": {"kind": "Absolute"}, "priority": 0},
            {"label": "freeTable", "volume": {"center": [0.0, 2.2, 0.92],
                                              "extents": [0.6, 0.6, 0.4]},
             "anchor": {"kind": "Absolute"}, "priority": 0},
        ],
        "placeAssignments": {
            "mustard": ["countertop"],
            "bio-milk": ["countertop"],
            "apple-tea": ["countertop"],
            "spraybottle": ["workbench"],
            "screwbox": ["workbench"],
            "sponge": ["sink"],
        },
    }


def bimanual_scene() -> dict:
    crate_top = 0.60
    return {
        "formatVersion": 1,
        "objects": [
            object_entry("bigbox1", "crate-load", 1.5, 0.0, crate_top + 0.09,
                         0.24, 0.50, 0.18, known=False),
        ],
        "staticBoxes": [
            dict(box(1.5, 0.0, 0.30, 0.5, 0.7, 0.60), name="crateA"),
            dict(box(0.2, 1.8, 0.30, 0.5, 0.7, 0.60), name="crateB"),
        ],
        "commonPlaces": [
            {"label": "dropZone", "volume": {"center": [0.2, 1.8, 0.85],
                                             "extents": [0.45, 0.6, 0.5]},
             "anchor": {"kind": "Absolute"}, "priority": 0},
        ],
        "placeAssignments": {},
        "cloud": "bimanual_boxes.xyz",
        "cloudViewpoint": [0.0, 0.0, 1.6],
    }


def drawer_scene(tag: str, cabinet_center, yaw: float) -> dict:
    # handle frame: z into the drawer, y lateral (mirror plane is x-z)
    handle_ori = geo.orientation_from_axes((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))
    q_yaw = geo.quat_from_axis_angle((0, 0, 1), yaw)
    cx, cy = cabinet_center
    front = geo.qrotate(q_yaw, (-0.30 - 0.06, 0.0, 0.0))
    handle_pos = (cx + front[0], cy + front[1], 0.72)
    return {
        "formatVersion": 1,
        "objects": [
            {"id": f"drawer{tag}", "class": "drawer", "known": True,
             "fixed": True,
             "pose": {"position": list(handle_pos),
                      "orientation": list(q_yaw)},
             "collisionBox": {"center": [0, 0, 0],
                              "extents": [0.03, 0.12, 0.03]},
             "affordanceFrames": {
                 "handle": {"position": [0, 0, 0],
                            "orientation": list(handle_ori)}}},
        ],
        "staticBoxes": [
            dict(box(cx, cy, 0.4, 0.6, 0.8, 0.8), name=f"cabinet{tag}"),
        ],
        "commonPlaces": [],
        "placeAssignments": {},
    }


def pour_scene() -> dict:
    table_top = 0.72
    return {
        "formatVersion": 1,
        "objects": [
            object_entry("jug1", "jug", 1.25, 0.18, table_top + 0.09,
                         0.08, 0.07, 0.18,
                         extra={"affordanceFrames": {
                             "pour": {"position": [0.05, 0.0, 0.11],
                                      "orientation": [1, 0, 0, 0]}}}),
            object_entry("mug1", "mug", 1.25, -0.22, table_top + 0.05,
                         0.08, 0.08, 0.10,
                         extra={"affordanceFrames": {
                             "fill": {"position": [0.0, 0.0, 0.06],
                                      "orientation": [1, 0, 0, 0]}}}),
        ],
        "staticBoxes": [
            dict(box(1.4, 0.0, 0.36, 0.7, 1.0, 0.72), name="table"),
        ],
        "commonPlaces": [],
        "placeAssignments": {},
    }


# --- clouds ----------------------------------------------------------------------

def write_cloud_for_scene(scene_path: Path, xyz_name: str,
                          object_ids: list) -> None:
    raw = json.loads(scene_path.read_text())
    raw.pop("cloud", None)  # sidecar may not exist yet
    scene = Scene.from_dict(raw)
    points = []
    labels = []
    for label, oid in enumerate(object_ids):
        obj_box = scene.object_by_id(oid).global_box()
        pts = sample_box_surface(obj_box, 0.02)
        points.append(pts)
        labels.extend([label] * len(pts))
    cloud = PointCloud(points=np.vstack(points), labels=np.array(labels))
    save_xyz(scene_path.parent / xyz_name, cloud)


# --- drawer demonstration ----------------------------------------------------------

def make_drawer_demo(scene_path: Path) -> Demonstration:
    """Kinesthetic pull recorded on drawer A: 0.18 m out of the drawer with a
    small lateral curl, hook/close at the start, open at the end."""
    scene = load_scene(scene_path)
    drawer = scene.object_by_id("drawerA")
    handle_local = drawer.affordance_frames["handle"]
    aff = geo.compose((drawer.pose.position, drawer.pose.orientation),
                      (handle_local.position, handle_local.orientation))
    samples = []
    n = 41
    for i in range(n):
        s = i / (n - 1)
        # in the handle frame: z into the drawer, y lateral
        local = Pose(position=(0.0, 0.015 * math.sin(math.pi * s), -0.18 * s))
        pos, ori = geo.compose(aff, (local.position, local.orientation))
        shape = None
        if i == 0:
            shape = "hook"
        elif i == 1:
            shape = "close"
        elif i == n - 1:
            shape = "open"
        samples.append((2.0 * s, Pose(position=pos, orientation=ori), shape))
    return Demonstration(samples=tuple(samples),
                         affordance_frame_global=Pose(position=aff[0],
                                                      orientation=aff[1]),
                         source_robot="helperA", source_arm="right_arm",
                         source_handedness=SideHint.Right)


# --- scenario + click files ----------------------------------------------------------

def main() -> None:
    robots = ASSETS / "robots"
    scenes = ASSETS / "scenes"
    grasps = ASSETS / "grasps"
    scenarios = ASSETS / "scenarios"
    clicks = ASSETS / "clicks"

    write_json(robots / "helper_a.robot.json", make_helper("helperA", 2).to_dict())
    write_json(robots / "helper_b.robot.json", make_helper("helperB", 4).to_dict())
    write_json(robots / "rover_one.robot.json", make_rover().to_dict())

    write_json(grasps / "household.grasps.json",
               dict(make_grasp_db().to_dict(), formatVersion=1))

    write_json(scenes / "table_clearing.scene.json", table_clearing_scene())
    write_json(scenes / "bimanual_boxes.scene.json", bimanual_scene())
    write_json(scenes / "drawer_a.scene.json",
               drawer_scene("A", (1.5, 0.0), 0.0))
    write_json(scenes / "drawer_b.scene.json",
               drawer_scene("B", (-1.5, 0.6), math.pi))
    write_json(scenes / "pour.scene.json", pour_scene())

    write_cloud_for_scene(scenes / "bimanual_boxes.scene.json",
                          "bimanual_boxes.xyz", ["bigbox1"])

    save_demonstration(ASSETS / "drawer_demo.demo.json",
                       make_drawer_demo(scenes / "drawer_a.scene.json"))

    big_front_x = 1.5 - 0.12  # front face of the load on crate A
    write_json(clicks / "bimanual.clicks.json", {
        "formatVersion": 1,
        "clicks": [
            {"point": [big_front_x, 0.18, 0.72], "actionType": "Grasp"},
            {"point": [big_front_x, -0.18, 0.72], "actionType": "Grasp"},
        ],
    })

    write_json(scenarios / "table_clearing_b.scenario.json", {
        "formatVersion": 1,
        "name": "tableClearingHelperB",
        "task": "TableClearing",
        "robotFile": "../robots/helper_b.robot.json",
        "sceneFile": "../scenes/table_clearing.scene.json",
        "graspDbFile": "../grasps/household.grasps.json",
        "knownClasses": ["mustard", "bio-milk", "apple-tea", "spraybottle"],
    })
    write_json(scenarios / "table_clearing_a.scenario.json", {
        "formatVersion": 1,
        "name": "tableClearingHelperA",
        "task": "TableClearing",
        "robotFile": "../robots/helper_a.robot.json",
        "sceneFile": "../scenes/table_clearing.scene.json",
        "graspDbFile": "../grasps/household.grasps.json",
        "knownClasses": ["mustard", "bio-milk", "apple-tea", "spraybottle",
                         "screwbox", "sponge"],
    })
    write_json(scenarios / "bimanual_boxes.scenario.json", {
        "formatVersion": 1,
        "name": "bimanualBoxes",
        "task": "BoxPickingBimanual",
        "robotFile": "../robots/helper_a.robot.json",
        "sceneFile": "../scenes/bimanual_boxes.scene.json",
        "clicksFile": "../clicks/bimanual.clicks.json",
    })
    write_json(scenarios / "drawer_transfer.scenario.json", {
        "formatVersion": 1,
        "name": "drawerTransfer",
        "task": "DrawerTransfer",
        "robotFile": "../robots/helper_a.robot.json",
        "sceneFile": "../scenes/drawer_a.scene.json",
        "robot2File": "../robots/helper_b.robot.json",
        "scene2File": "../scenes/drawer_b.scene.json",
        "demoFile": "../drawer_demo.demo.json",
    })
    write_json(scenarios / "pour.scenario.json", {
        "formatVersion": 1,
        "name": "pourTransfer",
        "task": "Pour",
        "robotFile": "../robots/rover_one.robot.json",
        "sceneFile": "../scenes/pour.scene.json",
        "graspDbFile": "../grasps/household.grasps.json",
        "referenceFile": "../pour_reference.demo.json",
    })

    write_json(ASSETS / "pipeline.config.json", {
        "placement": {
            "weights": {"wIK": 10.0, "wLimits": 1.0, "wCollision": 100.0,
                        "wManip": 1.0, "wOrient": 0.5},
            "sampleCount": 64, "annulusMin": 0.4, "annulusMax": 1.0,
            "preDistance": 0.10, "forceThreshold": 8.0,
            "bimanualStandoff": 0.55,
        },
        "selection": {"wHeight": 1.0, "wSide": 0.5, "wTravel": 1.0,
                      "preferredSide": "Either"},
        "validation": {"approachToleranceDeg": 30.0, "pathSamples": 20},
        "discovery": {"clusterRadius": 0.05, "clusterMinPoints": 20,
                      "placeGrid": 3, "placeDropHeight": 0.01,
                      "clickMaxDistance": 0.05, "clickNeighborhood": 0.03},
        "execution": {"stepsPerSegment": 50, "dt": 0.02,
                      "contactInflation": 0.005, "restTolerance": 0.02},
    })
    print("assets written under", ASSETS)


if __name__ == "__main__":
    main()
