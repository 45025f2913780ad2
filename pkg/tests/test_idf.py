from __future__ import annotations

import numpy as np
import pytest

from manipflow.idf import (ActionHypothesis, EndEffectorTrajectory,
                           ExecutedAction, FramedPose, InvariantViolation,
                           MalformedText, Pose, TrajectoryKeypoint,
                           UnknownActionType, Unimanual, deserialize,
                           from_jsonable, serialize, to_jsonable)

import support


def test_identity_pose_round_trip():
    pose = Pose()
    text = serialize(pose)
    assert '"orientation":[1.0,0.0,0.0,0.0]' in text
    assert deserialize(text, Pose) == pose


def test_two_unimanual_action_round_trip():
    rng = np.random.default_rng(7)
    action = support.random_action(rng)
    while len(action.unimanuals) != 2:
        action = support.random_action(rng)
    text = serialize(action)
    back = deserialize(text, "ExecutableAction")
    assert back == action
    assert len(back.unimanuals) == 2


def test_serialization_is_byte_deterministic():
    rng = np.random.default_rng(11)
    executed = support.random_executed(rng)
    assert serialize(executed) == serialize(executed)
    clone = deserialize(serialize(executed))
    assert serialize(clone) == serialize(executed)


def test_round_trip_field_exact_across_types():
    rng = np.random.default_rng(1234)
    for i in range(64):
        entity = support.random_entity(rng, i)
        assert deserialize(serialize(entity)) == entity


def test_unknown_action_type_rejected():
    rng = np.random.default_rng(2)
    d = to_jsonable(support.random_hypothesis(rng))
    d["actionType"] = "Fly"
    with pytest.raises(UnknownActionType):
        from_jsonable(d)


def test_decreasing_phase_rejected():
    kp = lambda p: {"pose": {"pose": Pose().to_dict(), "frame": "tcp:anchor"},
                    "phase": p}
    payload = {"formatVersion": 1, "type": "EndEffectorTrajectory",
               "keypoints": [kp(0.5), kp(0.2)]}
    with pytest.raises(InvariantViolation, match="phase strictly increasing"):
        from_jsonable(payload)


def test_malformed_text():
    with pytest.raises(MalformedText):
        deserialize("{not json", Pose)
    with pytest.raises(MalformedText):
        deserialize("[1, 2, 3]", Pose)


def test_non_unit_quaternion_rejected():
    with pytest.raises(InvariantViolation, match="quaternion"):
        Pose(orientation=(1.0, 0.2, 0.0, 0.0))


def test_bad_frame_grammar_rejected():
    with pytest.raises(InvariantViolation, match="frame"):
        FramedPose(pose=Pose(), frame="world")


def test_force_threshold_positive():
    rng = np.random.default_rng(3)
    with pytest.raises(InvariantViolation, match="forceThreshold"):
        Unimanual(end_effector_name="a",
                  execution_pose=support.random_framed_pose(rng),
                  trajectory=support.random_trajectory(rng),
                  force_threshold=0.0)


def test_failure_phase_iff_failure():
    rng = np.random.default_rng(4)
    executed = support.random_executed(rng)
    d = to_jsonable(executed)
    if executed.failure_phase is None:
        d["failurePhase"] = "Approach"
    else:
        del d["failurePhase"]
    with pytest.raises(InvariantViolation, match="failurePhase"):
        from_jsonable(d)


def test_duplicate_end_effector_rejected():
    rng = np.random.default_rng(5)
    u = support.random_unimanual(rng, "right_arm")
    d = {"formatVersion": 1, "type": "ExecutableAction", "id": "a",
         "robotName": "r", "basePose": {"x": 0, "y": 0, "yaw": 0},
         "unimanuals": [u.to_dict(), u.to_dict()], "sourceHypothesisIds": []}
    with pytest.raises(InvariantViolation, match="endEffectorName"):
        from_jsonable(d)


def test_single_keypoint_phase_must_be_one():
    with pytest.raises(InvariantViolation, match="phase"):
        EndEffectorTrajectory(keypoints=(TrajectoryKeypoint(
            pose=FramedPose(pose=Pose(), frame="tcp:anchor"), phase=0.5),))


def test_hand_shape_and_fingers_mutually_exclusive():
    with pytest.raises(InvariantViolation, match="at most one"):
        TrajectoryKeypoint(pose=FramedPose(pose=Pose(), frame="tcp:anchor"),
                           phase=1.0, hand_shape="open",
                           finger_joint_values=(0.1,))
