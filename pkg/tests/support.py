"""Shared test helpers: deterministic entity generators and small worlds."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from manipflow import geometry as geo
from manipflow.discovery import GraspDatabase, GraspEntry
from manipflow.idf import (ActionHypothesis, ActionResult, ActionType,
                           CommonPlace, EndEffectorTrajectory, ExecutableAction,
                           ExecutedAction, ExecutionEvent, ExecutionPhase,
                           FramedPose, PlaceAnchor, Pose, SE2, SideHint,
                           TrajectoryKeypoint, Unimanual)
from manipflow.kinematics import Joint, JointType, SerialChain
from manipflow.robot import Arm, EndEffector, RobotDescription
from manipflow.scene import ObjectInstance, Scene, make_oobb

ASSETS = Path(__file__).resolve().parents[1] / "assets"

IDENTITY_AXES = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))


def random_quat(rng: np.random.Generator) -> geo.Quat:
    q = rng.normal(size=4)
    q = q / np.linalg.norm(q)
    return geo.quat(q)


def random_pose(rng: np.random.Generator, span: float = 2.0) -> Pose:
    return Pose(position=geo.vec3(rng.uniform(-span, span, 3)),
                orientation=random_quat(rng))


def random_framed_pose(rng: np.random.Generator) -> FramedPose:
    frame = rng.choice(["global", "object:cup1", "affordance:bottle1/pour",
                        "tcp:left_arm"])
    return FramedPose(pose=random_pose(rng), frame=str(frame))


def random_unit(rng: np.random.Generator) -> geo.Vec3:
    v = rng.normal(size=3)
    return geo.vec3(v / np.linalg.norm(v))


def random_hypothesis(rng: np.random.Generator, index: int = 0) -> ActionHypothesis:
    return ActionHypothesis(
        id=f"hyp{index}",
        action_type=ActionType[str(rng.choice([t.name for t in ActionType]))],
        pose=random_framed_pose(rng),
        approach_axis=random_unit(rng),
        provenance=str(rng.choice(["known", "unknownOOBB", "operator"])),
        confidence=float(rng.uniform(0, 1)),
        target_object_id="obj1" if rng.random() < 0.5 else None,
        side_hint=SideHint[str(rng.choice(["Left", "Right", "Either"]))],
        shape_open="open" if rng.random() < 0.5 else None,
        shape_closed="close" if rng.random() < 0.5 else None,
    )


def random_trajectory(rng: np.random.Generator) -> EndEffectorTrajectory:
    n = int(rng.integers(1, 6))
    if n == 1:
        phases = [1.0]
    else:
        interior = sorted(rng.uniform(0.01, 0.99, n - 2)) if n > 2 else []
        phases = [0.0] + [float(p) for p in interior] + [1.0]
    kps = []
    for phase in phases:
        shape = str(rng.choice(["open", "close", "hook"])) if rng.random() < 0.4 else None
        fingers = tuple(rng.uniform(0, 1.5, 2)) if shape is None and rng.random() < 0.3 else None
        kps.append(TrajectoryKeypoint(
            pose=FramedPose(pose=random_pose(rng, span=0.3), frame="tcp:anchor"),
            phase=phase, hand_shape=shape, finger_joint_values=fingers))
    return EndEffectorTrajectory(keypoints=tuple(kps))


def random_unimanual(rng: np.random.Generator, name: str = "right_arm") -> Unimanual:
    return Unimanual(
        end_effector_name=name,
        execution_pose=random_framed_pose(rng),
        trajectory=random_trajectory(rng),
        force_threshold=float(rng.uniform(1, 20)),
        pre_pose=random_framed_pose(rng) if rng.random() < 0.7 else None,
        retract_pose=random_framed_pose(rng) if rng.random() < 0.7 else None,
        object_ref="obj1" if rng.random() < 0.5 else None,
    )


def random_action(rng: np.random.Generator, index: int = 0) -> ExecutableAction:
    arms = ["right_arm"] if rng.random() < 0.5 else ["right_arm", "left_arm"]
    return ExecutableAction(
        id=f"action{index}",
        robot_name="testbot",
        base_pose=SE2(x=float(rng.uniform(-2, 2)), y=float(rng.uniform(-2, 2)),
                      yaw=float(rng.uniform(-math.pi, math.pi))),
        unimanuals=tuple(random_unimanual(rng, a) for a in arms),
        source_hypothesis_ids=tuple(f"hyp{i}" for i in range(len(arms))),
        score=float(rng.uniform(0, 5)) if rng.random() < 0.5 else None,
    )


def random_executed(rng: np.random.Generator, index: int = 0) -> ExecutedAction:
    failed = rng.random() < 0.3
    times = np.cumsum(rng.uniform(0.0, 0.1, int(rng.integers(1, 8))))
    events = tuple(
        ExecutionEvent(t=float(t), arm="right_arm", phase="Approach",
                       event=str(rng.choice(["waypoint", "contact", "shape"])),
                       data={"k": float(rng.uniform())} if rng.random() < 0.5 else None)
        for t in times)
    return ExecutedAction(
        id=f"episode{index}",
        action=random_action(rng, index),
        result=ActionResult.Failure if failed else ActionResult.Success,
        events=events,
        started_at=0.0,
        ended_at=float(times[-1]),
        failure_phase=ExecutionPhase.Approach if failed else None,
    )


def random_common_place(rng: np.random.Generator, index: int = 0) -> CommonPlace:
    kind = str(rng.choice(["Absolute", "RelativeToClass", "RelativeToInstance"]))
    anchor = PlaceAnchor(kind=kind,
                         ref=None if kind == "Absolute" else "table1")
    return CommonPlace(label=f"place{index}",
                       center=geo.vec3(rng.uniform(-2, 2, 3)),
                       extents=geo.vec3(rng.uniform(0.1, 1.0, 3)),
                       anchor=anchor, priority=int(rng.integers(0, 4)))


RANDOM_ENTITY_MAKERS = (
    lambda rng, i: random_pose(rng),
    lambda rng, i: random_framed_pose(rng),
    random_hypothesis,
    lambda rng, i: random_trajectory(rng),
    lambda rng, i: random_unimanual(rng),
    random_action,
    random_executed,
    random_common_place,
)


def random_entity(rng: np.random.Generator, index: int):
    maker = RANDOM_ENTITY_MAKERS[index % len(RANDOM_ENTITY_MAKERS)]
    return maker(rng, index)


# --- tiny worlds -------------------------------------------------------------

def planar_two_link(l1: float = 0.5, l2: float = 0.5) -> SerialChain:
    return SerialChain(
        "planar2",
        joints=(
            Joint("j1", JointType.Revolute, Pose(), (0, 0, 1), (-3.1, 3.1)),
            Joint("j2", JointType.Revolute, Pose(position=(l1, 0, 0)),
                  (0, 0, 1), (-3.1, 3.1)),
        ),
        tcp=Pose(position=(l2, 0, 0)))


def random_chain(rng: np.random.Generator, dof: int = 0) -> SerialChain:
    n = dof or int(rng.integers(2, 8))
    joints = []
    for i in range(n):
        jt = JointType.Prismatic if rng.random() < 0.2 else JointType.Revolute
        limits = ((-0.3, 0.3) if jt is JointType.Prismatic
                  else (float(rng.uniform(-3, -0.5)), float(rng.uniform(0.5, 3))))
        joints.append(Joint(
            name=f"j{i}", type=jt,
            origin=Pose(position=geo.vec3(rng.uniform(-0.3, 0.3, 3)),
                        orientation=random_quat(rng)),
            axis=random_unit(rng), limits=limits))
    return SerialChain(
        name=f"rand{n}", joints=tuple(joints),
        base=Pose(position=geo.vec3(rng.uniform(-0.2, 0.2, 3)),
                  orientation=random_quat(rng)),
        tcp=Pose(position=geo.vec3(rng.uniform(-0.2, 0.2, 3)),
                 orientation=random_quat(rng)))


def test_robot() -> RobotDescription:
    """The shipped two-armed helper robot (shared across tests)."""
    from manipflow.robot import load_robot
    return load_robot(ASSETS / "robots" / "helper_a.robot.json")


def simple_table_scene(object_height: float = 0.16,
                       object_class: str = "mustard") -> Scene:
    table = make_oobb((1.5, 0.0, 0.36), IDENTITY_AXES, (0.8, 1.2, 0.72))
    obj = ObjectInstance(
        id="box1", object_class=object_class,
        pose=Pose(position=(1.35, 0.1, 0.72 + object_height / 2)),
        collision_box=make_oobb((0, 0, 0), IDENTITY_AXES,
                                (0.06, 0.05, object_height)))
    places = (CommonPlace(label="shelf", center=(-1.2, 0.0, 1.0),
                          extents=(0.4, 0.8, 0.4),
                          anchor=PlaceAnchor("Absolute"), priority=0),)
    shelf_box = make_oobb((-1.35, 0.0, 0.4), IDENTITY_AXES, (0.5, 1.0, 0.8))
    return Scene(objects=(obj,), static_boxes=(table, shelf_box),
                 static_box_names=("table", "shelf"),
                 common_places=places,
                 place_assignments={object_class: ("shelf",)})


def top_grasp_db(object_class: str = "mustard",
                 height: float = 0.16) -> GraspDatabase:
    ori = geo.orientation_from_axes((0.0, 0.0, -1.0), (0.0, 1.0, 0.0))
    return GraspDatabase(entries=(
        GraspEntry(object_class=object_class, name="top",
                   grasp_pose=Pose(position=(0, 0, height / 2), orientation=ori),
                   approach_axis=(0, 0, -1)),
    ))
