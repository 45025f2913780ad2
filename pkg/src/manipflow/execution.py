"""Deterministic kinematic execution of executable actions.

The simulator tracks Cartesian waypoints exactly (the TCP pose *is* the
commanded waypoint) while a damped-least-squares IK shadow follows along to
assert feasibility; exceeding its residual gate mid-path fails the episode.
Force-threshold approach is modeled geometrically: a grasp approach ends
when the TCP enters the target's collision box inflated by 5 mm, a place
approach (hand holding an object) when the object's box bottom reaches a
support surface. Attached objects move rigidly with the TCP. Bimanual
actions run two arm executors in lockstep with barriers after each of the
four sync phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import geometry as geo
from .config import ExecutionConfig, PipelineConfig
from .idf import (ActionResult, ExecutableAction, ExecutedAction,
                  ExecutionEvent, ExecutionPhase, FramedPose, Pose, SE2,
                  Unimanual, _check)
from .kinematics import IKOptions, fk, ik, ik_seeds, seed_configurations
from .robot import Arm, RobotDescription
from .scene import ObjectInstance, Scene, find_support, resolve_frame

ARM_PHASES = (ExecutionPhase.PrePose, ExecutionPhase.Approach,
              ExecutionPhase.Trajectory, ExecutionPhase.Retract)


class ExecutionError(Exception):
    pass


class PreconditionError(ExecutionError):
    pass


class CorruptLog(ExecutionError):
    pass


@dataclass(frozen=True)
class Attachment:
    object_id: str
    grasp_transform: Pose  # object pose expressed in the TCP frame


@dataclass(frozen=True)
class WorldState:
    """Simulation substrate: scene snapshot, base pose, arm configurations,
    exact TCP poses, attachments and the simulation clock."""

    scene: Scene
    robot_base: SE2 = SE2()
    arm_configs: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)
    tcp_poses: Mapping[str, Pose] = field(default_factory=dict)
    attachments: Mapping[str, Attachment] = field(default_factory=dict)
    clock: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "arm_configs",
                           {k: tuple(float(x) for x in v)
                            for k, v in self.arm_configs.items()})
        object.__setattr__(self, "tcp_poses", dict(self.tcp_poses))
        object.__setattr__(self, "attachments", dict(self.attachments))
        ids = [a.object_id for a in self.attachments.values()]
        _check(len(ids) == len(set(ids)),
               "an object id appears in at most one attachment")


def initial_world(scene: Scene, robot: RobotDescription,
                  base: SE2 = SE2()) -> WorldState:
    configs = {a.name: a.home_config() for a in robot.arms}
    tcps = {a.name: _tcp_global(base, a, configs[a.name]) for a in robot.arms}
    return WorldState(scene=scene, robot_base=base, arm_configs=configs,
                      tcp_poses=tcps)


def _tcp_global(base: SE2, arm: Arm, q: Sequence[float]) -> Pose:
    local = fk(arm.chain, q)
    pos, ori = geo.compose(geo.se2_to_se3(base.x, base.y, base.yaw),
                           (local.position, local.orientation))
    return Pose(position=pos, orientation=ori)


def _interpolate(a: Pose, b: Pose, steps: int) -> List[Pose]:
    out = []
    for k in range(1, steps + 1):
        t = k / steps
        pos = geo.vadd(geo.vscale(a.position, 1.0 - t),
                       geo.vscale(b.position, t))
        ori = geo.slerp(a.orientation, b.orientation, t)
        out.append(Pose(position=pos, orientation=ori))
    return out


@dataclass
class _ArmFailure(Exception):
    phase: ExecutionPhase
    kind: str
    detail: str


class _Sim:
    """Mutable execution context shared by all arm executors of one action."""

    def __init__(self, action: ExecutableAction, world: WorldState,
                 robot: RobotDescription, config: ExecutionConfig):
        self.action = action
        self.robot = robot
        self.config = config
        self.scene = world.scene
        self.base = action.base_pose
        self.clock = world.clock
        self.arm_configs: Dict[str, Tuple[float, ...]] = dict(world.arm_configs)
        self.tcp_poses: Dict[str, Pose] = dict(world.tcp_poses)
        self.attachments: Dict[str, Attachment] = dict(world.attachments)
        self.contacted: Dict[str, set] = {}
        self.events: List[ExecutionEvent] = []
        self.start_base = world.robot_base

    def log(self, arm: str, phase: str, event: str,
            data: Optional[dict] = None) -> None:
        self.events.append(ExecutionEvent(t=self.clock, arm=arm, phase=phase,
                                          event=event, data=data))

    def tick(self) -> None:
        self.clock += self.config.dt

    def object(self, object_id: str) -> ObjectInstance:
        return self.scene.object_by_id(object_id)

    def attached_object(self, arm: str) -> Optional[ObjectInstance]:
        att = self.attachments.get(arm)
        return self.object(att.object_id) if att else None

    def holder_of(self, object_id: str) -> Optional[str]:
        for arm, att in self.attachments.items():
            if att.object_id == object_id:
                return arm
        return None

    def move_object(self, object_id: str, pose: Pose) -> None:
        self.scene = self.scene.with_object_pose(object_id, pose)

    def world_state(self) -> WorldState:
        return WorldState(scene=self.scene, robot_base=self.base,
                          arm_configs=self.arm_configs,
                          tcp_poses=self.tcp_poses,
                          attachments=self.attachments, clock=self.clock)


class _ArmExecutor:
    """One arm's state machine stepping through the four sync phases."""

    def __init__(self, sim: _Sim, unimanual: Unimanual, tolerances: IKOptions):
        self.sim = sim
        self.unimanual = unimanual
        self.arm = sim.robot.arm_by_name(unimanual.end_effector_name)
        self.name = self.arm.name
        self.tolerances = tolerances
        self.q = sim.arm_configs.get(self.name, self.arm.home_config())
        carried = sim.tcp_poses.get(self.name)
        self.tcp = carried if carried is not None else _tcp_global(
            sim.base, self.arm, self.q)
        sim.tcp_poses[self.name] = self.tcp
        self.phase_index = -1
        self.queue: List[Tuple[Pose, Optional[int]]] = []  # (pose, keypoint idx)
        self.anchor: Optional[Pose] = None
        self.approach_travel = 0.0
        self.approach_nominal = 0.0
        self.approach_dir: Optional[geo.Vec3] = None
        self.done = False
        self.failure: Optional[_ArmFailure] = None

    # -- phase machinery ---------------------------------------------------

    @property
    def phase(self) -> ExecutionPhase:
        return ARM_PHASES[self.phase_index]

    def start_phase(self, index: int) -> None:
        self.phase_index = index
        phase = ARM_PHASES[index]
        self.sim.log(self.name, phase.name, "phaseStart")
        steps = self.sim.config.steps_per_segment
        self.queue = []
        if phase is ExecutionPhase.PrePose:
            target_framed = self.unimanual.pre_pose or self.unimanual.execution_pose
            target = resolve_frame(self.sim.scene, target_framed)
            self.queue = [(p, None) for p in _interpolate(self.tcp, target, steps)]
        elif phase is ExecutionPhase.Approach:
            target = resolve_frame(self.sim.scene, self.unimanual.execution_pose)
            nominal = geo.vnorm(geo.vsub(target.position, self.tcp.position))
            self.approach_nominal = nominal
            self.approach_travel = 0.0
            if nominal > 1e-12:
                self.approach_dir = geo.vunit(
                    geo.vsub(target.position, self.tcp.position))
                self.queue = [(p, None)
                              for p in _interpolate(self.tcp, target, steps)]
            else:
                self.approach_dir = None
        elif phase is ExecutionPhase.Trajectory:
            self.anchor = self.tcp
            prev = self.tcp
            for ki, kp in enumerate(self.unimanual.trajectory.keypoints):
                target = Pose(*geo.compose(
                    (self.anchor.position, self.anchor.orientation),
                    (kp.pose.pose.position, kp.pose.pose.orientation)))
                waypoints = _interpolate(prev, target, steps)
                self.queue.extend((p, None) for p in waypoints[:-1])
                self.queue.append((waypoints[-1], ki))
                prev = target
        elif phase is ExecutionPhase.Retract:
            self._check_bimanual_lift()
            if self.unimanual.retract_pose is not None:
                target = resolve_frame(self.sim.scene, self.unimanual.retract_pose)
                self.queue = [(p, None)
                              for p in _interpolate(self.tcp, target, steps)]

    def phase_done(self) -> bool:
        if self.phase is ExecutionPhase.Approach:
            return not self.queue and not self._contact_pending()
        return not self.queue

    def complete_phase(self) -> None:
        self.sim.log(self.name, self.phase.name, "phaseComplete")

    # -- stepping ----------------------------------------------------------

    def step(self) -> None:
        if self.failure is not None or self.done:
            return
        try:
            self._step_inner()
        except _ArmFailure as fail:
            self.failure = fail
            self.sim.log(self.name, fail.phase.name, "failure",
                         {"error": fail.kind, "detail": fail.detail})

    def _step_inner(self) -> None:
        phase = self.phase
        if phase is ExecutionPhase.Approach and not self.queue:
            if not self._extend_approach():
                return
        if not self.queue:
            return
        pose, keypoint_index = self.queue.pop(0)
        self._move_to(pose)
        if phase is ExecutionPhase.Approach and self._check_contact():
            self.queue = []
        if keypoint_index is not None:
            self._apply_keypoint(keypoint_index)

    def _move_to(self, pose: Pose) -> None:
        self.sim.tick()
        self.tcp = pose
        self.sim.tcp_poses[self.name] = pose
        att = self.sim.attachments.get(self.name)
        if att is not None:
            obj_pose = Pose(*geo.compose(
                (pose.position, pose.orientation),
                (att.grasp_transform.position, att.grasp_transform.orientation)))
            self.sim.move_object(att.object_id, obj_pose)
        # IK shadow: the commanded pose must stay trackable
        base_inv = geo.invert(geo.se2_to_se3(self.sim.base.x, self.sim.base.y,
                                             self.sim.base.yaw))
        local = Pose(*geo.compose(base_inv, (pose.position, pose.orientation)))
        res = ik(self.arm.chain, local, self.q, IKOptions(max_iter=30))
        gate = self.sim.config.tracking_tolerance_factor * self.tolerances.pos_tol
        if res.pos_residual > gate:
            res = ik_seeds(self.arm.chain, local,
                           (self.q, *seed_configurations(
                               self.arm.chain, self.arm.home_config())),
                           IKOptions())
        self.q = tuple(float(v) for v in res.q)
        self.sim.arm_configs[self.name] = self.q
        if res.pos_residual > gate:
            raise _ArmFailure(self.phase, "IKTrackingLost",
                              f"residual {res.pos_residual:.5f} m > {gate:.5f} m")
        self.sim.log(self.name, self.phase.name, "waypoint",
                     {"pose": pose.to_dict()})

    # -- approach contact ----------------------------------------------------

    def _contact_pending(self) -> bool:
        """True while the approach still owes a contact event."""
        ref = self.unimanual.object_ref
        if ref is None:
            return False
        try:
            obj = self.sim.object(ref)
        except Exception:
            return False
        holder = self.sim.holder_of(ref)
        if holder is not None:
            # place-like: referenced object is in hand; needs support contact
            return find_support(self.sim.scene, obj.global_box(),
                                self.sim.config.contact_inflation) is None
        inflated = obj.global_box().inflated(self.sim.config.contact_inflation)
        return not inflated.contains(self.tcp.position)

    def _check_contact(self) -> bool:
        ref = self.unimanual.object_ref
        if ref is None:
            return False
        try:
            obj = self.sim.object(ref)
        except Exception:
            return False
        holder = self.sim.holder_of(ref)
        if holder is not None:
            support = find_support(self.sim.scene, obj.global_box(),
                                   self.sim.config.contact_inflation)
            if support is None:
                return False
            self.sim.log(self.name, self.phase.name, "contact",
                         {"support": support.name, "object": ref})
            self.sim.contacted.setdefault(ref, set()).add(self.name)
            return True
        box = obj.global_box()
        if box.inflated(self.sim.config.contact_inflation).contains(self.tcp.position):
            penetration = box.depth_inside(self.tcp.position)
            self.sim.log(self.name, self.phase.name, "contact",
                         {"object": ref, "penetration": penetration})
            self.sim.contacted.setdefault(ref, set()).add(self.name)
            return True
        return False

    def _extend_approach(self) -> bool:
        """March past the planned pose while contact is still owed, up to
        twice the nominal approach distance."""
        if not self._contact_pending():
            return False
        if self.approach_dir is None or self.approach_nominal <= 1e-12:
            raise _ArmFailure(self.phase, "ContactNeverReached",
                              "no approach direction to extend along")
        step = self.approach_nominal / self.sim.config.steps_per_segment
        if self.approach_travel + step > self.approach_nominal:
            raise _ArmFailure(
                self.phase, "ContactNeverReached",
                f"no contact within 2 x nominal approach "
                f"({2 * self.approach_nominal:.3f} m)")
        self.approach_travel += step
        pose = Pose(position=geo.vadd(self.tcp.position,
                                      geo.vscale(self.approach_dir, step)),
                    orientation=self.tcp.orientation)
        self.queue.append((pose, None))
        return True

    # -- hand shapes ---------------------------------------------------------

    def _apply_keypoint(self, index: int) -> None:
        kp = self.unimanual.trajectory.keypoints[index]
        if kp.finger_joint_values is not None:
            self.sim.log(self.name, self.phase.name, "fingers",
                         {"values": list(kp.finger_joint_values)})
            return
        if kp.hand_shape is None:
            return
        shape = kp.hand_shape
        fingers = self.arm.end_effector.shape_table.get(shape)
        self.sim.log(self.name, self.phase.name, "shape",
                     {"name": shape,
                      "fingers": list(fingers) if fingers is not None else None})
        if self.arm.end_effector.is_open_shape(shape):
            self._open_hand()
        else:
            self._close_hand()

    def _close_hand(self) -> None:
        if self.name in self.sim.attachments:
            return
        candidates: List[Tuple[float, ObjectInstance]] = []
        for obj in self.sim.scene.objects:
            if obj.fixed:
                continue
            box = obj.global_box().inflated(self.sim.config.contact_inflation)
            if box.contains(self.tcp.position):
                holder = self.sim.holder_of(obj.id)
                if holder is not None:
                    # second hand on an already-held object: support contact
                    self.sim.contacted.setdefault(obj.id, set()).add(self.name)
                    self.sim.log(self.name, self.phase.name, "supportContact",
                                 {"object": obj.id, "heldBy": holder})
                    return
                d = geo.vnorm(geo.vsub(self.tcp.position, box.center))
                bonus = 0.0 if obj.id == self.unimanual.object_ref else 1.0
                candidates.append((bonus + d, obj))
        if not candidates:
            self.sim.log(self.name, self.phase.name, "closeOnAir")
            return
        candidates.sort(key=lambda c: (c[0], c[1].id))
        obj = candidates[0][1]
        tcp_inv = geo.invert((self.tcp.position, self.tcp.orientation))
        grasp = Pose(*geo.compose(tcp_inv, (obj.pose.position,
                                            obj.pose.orientation)))
        self.sim.attachments[self.name] = Attachment(object_id=obj.id,
                                                     grasp_transform=grasp)
        self.sim.contacted.setdefault(obj.id, set()).add(self.name)
        self.sim.log(self.name, self.phase.name, "attach",
                     {"object": obj.id, "graspTransform": grasp.to_dict()})

    def _open_hand(self) -> None:
        att = self.sim.attachments.pop(self.name, None)
        if att is None:
            return
        obj = self.sim.object(att.object_id)
        box = obj.global_box()
        support = find_support(self.sim.scene, box,
                               self.sim.config.rest_tolerance)
        if support is None:
            self.sim.log(self.name, self.phase.name, "detach",
                         {"object": att.object_id, "rested": False})
            raise _ArmFailure(ExecutionPhase.Trajectory, "DroppedObject",
                              f"released {att.object_id!r} in the air")
        bottom = float(box.corners()[:, 2].min())
        drop = bottom - support.top_z
        rested = Pose(position=(obj.pose.position[0], obj.pose.position[1],
                                obj.pose.position[2] - drop),
                      orientation=obj.pose.orientation)
        self.sim.move_object(att.object_id, rested)
        self.sim.log(self.name, self.phase.name, "detach",
                     {"object": att.object_id, "rested": True,
                      "support": support.name})

    def _check_bimanual_lift(self) -> None:
        """A held object needs a second contact before lifting bimanually."""
        if len(self.sim.action.unimanuals) < 2:
            return
        att = self.sim.attachments.get(self.name)
        if att is None:
            return
        arms = {u.end_effector_name for u in self.sim.action.unimanuals}
        touched = self.sim.contacted.get(att.object_id, set())
        if not (arms - {self.name}) <= touched:
            raise _ArmFailure(ExecutionPhase.Retract, "DroppedObject",
                              f"lifting {att.object_id!r} without the second "
                              f"arm's contact")


def _run_phases(sim: _Sim, executors: List[_ArmExecutor]) -> Optional[_ArmFailure]:
    """Advance all executors through the four phases with a barrier after
    each phase: no arm starts phase k+1 until every arm completed phase k."""
    earliest_failure: Optional[_ArmFailure] = None
    for index in range(len(ARM_PHASES)):
        for executor in executors:
            if executor.failure is None:
                try:
                    executor.start_phase(index)
                except _ArmFailure as fail:
                    executor.failure = fail
                    sim.log(executor.name, fail.phase.name, "failure",
                            {"error": fail.kind, "detail": fail.detail})
        # lockstep: alternate single waypoint steps until the phase drains
        while any(e.failure is None and not e.phase_done() for e in executors):
            for executor in executors:
                if executor.failure is None and not executor.phase_done():
                    executor.step()
        for executor in executors:
            if executor.failure is None:
                executor.complete_phase()
            elif earliest_failure is None:
                earliest_failure = executor.failure
        if earliest_failure is not None:
            return earliest_failure  # abort both at the barrier
    return None


def execute_action(action: ExecutableAction, world: WorldState,
                   robot: RobotDescription,
                   config: PipelineConfig = PipelineConfig()
                   ) -> Tuple[ExecutedAction, WorldState]:
    """Execute a validated action; returns the episode and the next world.

    Deterministic: events carry simulation-clock times only, so repeated
    runs produce byte-identical episodes.
    """
    if len(action.unimanuals) == 2:
        return execute_bimanual(action, world, robot, config)
    if len(action.unimanuals) != 1:
        raise PreconditionError("execute_action handles 1- or 2-arm actions")
    return _execute(action, world, robot, config)


def execute_bimanual(action: ExecutableAction, world: WorldState,
                     robot: RobotDescription,
                     config: PipelineConfig = PipelineConfig()
                     ) -> Tuple[ExecutedAction, WorldState]:
    if len(action.unimanuals) != 2:
        raise PreconditionError(
            f"bimanual execution needs exactly 2 unimanuals, "
            f"got {len(action.unimanuals)}")
    return _execute(action, world, robot, config)


def _execute(action: ExecutableAction, world: WorldState,
             robot: RobotDescription,
             config: PipelineConfig) -> Tuple[ExecutedAction, WorldState]:
    sim = _Sim(action, world, robot, config.execution)
    started = sim.clock

    travel = math.hypot(action.base_pose.x - world.robot_base.x,
                        action.base_pose.y - world.robot_base.y)
    sim.log("base", ExecutionPhase.Navigate.name, "phaseStart")
    sim.tick()
    # the whole robot rides along: arms keep their base-relative poses and
    # held objects keep their grasp transforms
    shift = geo.compose(
        geo.se2_to_se3(sim.base.x, sim.base.y, sim.base.yaw),
        geo.invert(geo.se2_to_se3(world.robot_base.x, world.robot_base.y,
                                  world.robot_base.yaw)))
    for arm_name, tcp in list(sim.tcp_poses.items()):
        moved = Pose(*geo.compose(shift, (tcp.position, tcp.orientation)))
        sim.tcp_poses[arm_name] = moved
        attachment = sim.attachments.get(arm_name)
        if attachment is not None:
            sim.move_object(attachment.object_id, Pose(*geo.compose(
                (moved.position, moved.orientation),
                (attachment.grasp_transform.position,
                 attachment.grasp_transform.orientation))))
    sim.log("base", ExecutionPhase.Navigate.name, "navigate",
            {"travel": travel, "to": action.base_pose.to_dict()})
    sim.log("base", ExecutionPhase.Navigate.name, "phaseComplete")

    executors = [_ArmExecutor(sim, u, IKOptions()) for u in action.unimanuals]
    failure = _run_phases(sim, executors)

    if failure is None:
        result = ActionResult.Success
        failure_phase = None
    else:
        result = ActionResult.Failure
        failure_phase = failure.phase
    executed = ExecutedAction(
        id=action.id,
        action=action,
        result=result,
        events=tuple(sim.events),
        started_at=started,
        ended_at=sim.clock,
        failure_phase=failure_phase,
    )
    return executed, sim.world_state()


# --- replay ---------------------------------------------------------------------

@dataclass(frozen=True)
class ReplaySample:
    t: float
    arm: str
    pose: Pose


def replay(executed: ExecutedAction) -> List[ReplaySample]:
    """Reconstruct per-arm TCP pose streams from the logged waypoints."""
    out: List[ReplaySample] = []
    last_t = -math.inf
    for event in executed.events:
        if event.t < last_t:
            raise CorruptLog(
                f"event timestamps decrease at t={event.t} (< {last_t})")
        last_t = event.t
        if event.event != "waypoint":
            continue
        if not event.data or "pose" not in event.data:
            raise CorruptLog("waypoint event without pose payload")
        out.append(ReplaySample(t=event.t, arm=event.arm,
                                pose=Pose.from_dict(event.data["pose"])))
    return out


def replay_csv(executed: ExecutedAction) -> str:
    rows = ["t,arm,x,y,z,qw,qx,qy,qz"]
    for s in replay(executed):
        p, o = s.pose.position, s.pose.orientation
        rows.append(f"{s.t!r},{s.arm},{p[0]!r},{p[1]!r},{p[2]!r},"
                    f"{o[0]!r},{o[1]!r},{o[2]!r},{o[3]!r}")
    return "\n".join(rows) + "\n"
