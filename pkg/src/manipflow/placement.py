"""Parameterization: turn robot-agnostic hypotheses into executable actions.

Base placement follows the two-step scheme: a deterministic annulus sweep
produces collision-free seed placements ordered by base travel, then a
derivative-free pattern search locally refines position and heading against
a cost mixing IK residual, joint-limit avoidance, collision, manipulability
and target bearing. Refinement never returns a worse cost than its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .config import PipelineConfig, PlacementWeights
from .idf import (ActionHypothesis, ActionType, EndEffectorTrajectory,
                  ExecutableAction, FramedPose, Pose, SE2, SideHint,
                  TrajectoryKeypoint, Unimanual)
from .kinematics import (IKOptions, SerialChain, empirical_reach, fk, ik,
                         ik_seeds, jacobian, joint_limit_cost,
                         manipulability, seed_configurations)
from .execution import Attachment
from .memory import Skill
from .robot import Arm, RobotDescription
from .scene import OOBB, Scene, resolve_frame

KEYPOINT_FRAME = "tcp:anchor"  # trajectory keypoints are anchor-relative

BASE_CLEARANCE_HEIGHT = 1.4  # static boxes starting above this do not block the base


class PlacementError(Exception):
    pass


class NoFreePlacement(PlacementError):
    pass


class NoIKSolution(PlacementError):
    pass


class MissingSkillTrajectory(PlacementError):
    pass


class HandsTooFarApart(PlacementError):
    pass


@dataclass(frozen=True)
class PlacementCandidate:
    base: SE2
    initial_cost: float
    arm_name: str
    refined_cost: Optional[float] = None
    ik_solution: Optional[Tuple[float, ...]] = None


# --- 2-D base collision --------------------------------------------------------

def _hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of 2-D points (counterclockwise)."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return np.array(pts)

    def half(seq):
        out: List[Tuple[float, float]] = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return np.array(lower[:-1] + upper[:-1])


def _point_in_polygon(x: float, y: float, poly: np.ndarray) -> bool:
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _disc_hits_polygon(x: float, y: float, r: float, poly: np.ndarray) -> bool:
    if len(poly) == 0:
        return False
    if len(poly) <= 2:
        pts = poly
    else:
        if _point_in_polygon(x, y, poly):
            return True
        pts = poly
    n = len(pts)
    r2 = r * r
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n] if n > 1 else pts[i]
        dx, dy = bx - ax, by - ay
        denom = dx * dx + dy * dy
        t = 0.0 if denom == 0.0 else max(0.0, min(1.0, ((x - ax) * dx + (y - ay) * dy) / denom))
        qx, qy = ax + t * dx, ay + t * dy
        if (x - qx) ** 2 + (y - qy) ** 2 <= r2:
            return True
    return False


def _base_blockers(scene: Scene) -> List[np.ndarray]:
    polys = []
    for box in scene.static_boxes:
        corners = box.corners()
        if float(corners[:, 2].min()) > BASE_CLEARANCE_HEIGHT:
            continue
        polys.append(_hull_2d(corners[:, :2]))
    return polys


def base_collides(scene: Scene, x: float, y: float, radius: float,
                  blockers: Optional[List[np.ndarray]] = None) -> bool:
    """Footprint disc vs static-box ground projections."""
    if blockers is None:
        blockers = _base_blockers(scene)
    return any(_disc_hits_polygon(x, y, radius, poly) for poly in blockers)


# --- sampling ------------------------------------------------------------------

def sample_placements(scene: Scene, target_pose_global: Pose,
                      robot: RobotDescription, n: int = 64,
                      current_base: SE2 = SE2(),
                      annulus: Tuple[float, float] = (0.4, 1.0)) -> List[SE2]:
    """Deterministic annulus sweep around the target's ground projection.

    Rings x bearings cover the annulus; every candidate faces the target.
    Candidates whose footprint disc hits a static-box ground projection are
    dropped; survivors are ordered by base travel from the current pose.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tx, ty = target_pose_global.position[0], target_pose_global.position[1]
    rings = max(1, int(round(math.sqrt(n))))
    bearings = int(math.ceil(n / rings))
    radii = np.linspace(annulus[0], annulus[1], rings)
    angles = np.linspace(0.0, 2.0 * math.pi, bearings, endpoint=False)
    blockers = _base_blockers(scene)

    out: List[SE2] = []
    produced = 0
    for r in radii:
        for a in angles:
            if produced >= n:
                break
            produced += 1
            x = tx + r * math.cos(a)
            y = ty + r * math.sin(a)
            if base_collides(scene, x, y, robot.footprint_radius, blockers):
                continue
            yaw = math.atan2(ty - y, tx - x)
            out.append(SE2(x=x, y=y, yaw=yaw))
    if not out:
        raise NoFreePlacement(
            f"all {n} sampled placements collide with static geometry")
    out.sort(key=lambda b: (math.hypot(b.x - current_base.x, b.y - current_base.y),
                            b.x, b.y))
    return out


# --- refinement ----------------------------------------------------------------

def _target_in_base(base: SE2, target: Pose) -> Pose:
    inv = geo.invert(geo.se2_to_se3(base.x, base.y, base.yaw))
    pos, ori = geo.compose(inv, (target.position, target.orientation))
    return Pose(position=pos, orientation=ori)


def _wrist_hits_static(scene: Scene, point: geo.Vec3, radius: float) -> bool:
    return any(box.distance_outside(point) <= radius
               for box in scene.static_boxes)


@dataclass(frozen=True)
class RefinedPlacement:
    base: SE2
    cost: float
    q: Tuple[float, ...]
    pos_residual: float
    ori_residual: float
    converged: bool = False


def refine_placement(candidate: SE2, target_pose_global: Pose, arm: Arm,
                     scene: Scene, robot: RobotDescription,
                     weights: PlacementWeights = PlacementWeights(),
                     max_evals: int = 200,
                     ik_opts: IKOptions = IKOptions(max_iter=30)
                     ) -> RefinedPlacement:
    """Pattern search over (x, y, yaw) minimizing the placement cost.

    Initial steps (5 cm, 5 cm, 0.1 rad) halve whenever no axis move
    improves; terminates when all steps fall below (1 mm, 1 mm, 0.01 rad)
    or after ``max_evals`` cost evaluations. The best visited point is
    returned, so the result never costs more than the seed.
    """
    blockers = _base_blockers(scene)
    chain = arm.chain
    warm_start: Dict[str, np.ndarray] = {"q": np.array(arm.home_config())}
    wrist_bad = _wrist_hits_static(scene, target_pose_global.position,
                                   robot.wrist_radius)
    gate = IKOptions()
    reach = empirical_reach(chain)
    retry_budget = [8]  # clean-seed retries are expensive; spend them wisely

    def evaluate(base: SE2) -> RefinedPlacement:
        local_target = _target_in_base(base, target_pose_global)
        slack = (geo.vnorm(geo.vsub(local_target.position,
                                    chain.base.position)) - reach)
        if slack > 0.02:
            # clearly out of reach: the distance itself is the gradient
            q_home = tuple(float(v) for v in arm.home_config())
            collision = 1.0 if (wrist_bad or base_collides(
                scene, base.x, base.y, robot.footprint_radius,
                blockers)) else 0.0
            cost = (weights.w_ik * slack * slack
                    + weights.w_collision * collision)
            return RefinedPlacement(base=base, cost=cost, q=q_home,
                                    pos_residual=slack, ori_residual=0.0,
                                    converged=False)
        res = ik(chain, local_target, warm_start["q"], ik_opts)
        if not res.converged and res.pos_residual < 0.05 and retry_budget[0] > 0:
            # warm starts can drag a bad basin along the search; retry clean
            retry = ik_seeds(chain, local_target,
                             seed_configurations(chain, arm.home_config()),
                             IKOptions(max_iter=60))
            if retry.converged:
                res = retry
            else:
                retry_budget[0] -= 1
                if (retry.pos_residual + 0.1 * retry.ori_residual
                        < res.pos_residual + 0.1 * res.ori_residual):
                    res = retry
        warm_start["q"] = res.q
        residual = res.pos_residual + 0.1 * res.ori_residual
        limit_cost = joint_limit_cost(chain, res.q)
        manip = manipulability(jacobian(chain, res.q), robot.manipulability_block)
        collision = 1.0 if (wrist_bad or base_collides(
            scene, base.x, base.y, robot.footprint_radius, blockers)) else 0.0
        bearing = math.atan2(target_pose_global.position[1] - base.y,
                             target_pose_global.position[0] - base.x)
        orient_cost = 1.0 - math.cos(geo.wrap_angle(bearing - base.yaw))
        cost = (weights.w_ik * residual * residual
                + weights.w_limits * limit_cost
                + weights.w_collision * collision
                + weights.w_orient * orient_cost
                - weights.w_manip * manip)
        return RefinedPlacement(base=base, cost=cost,
                                q=tuple(float(v) for v in res.q),
                                pos_residual=res.pos_residual,
                                ori_residual=res.ori_residual,
                                converged=(res.pos_residual <= gate.pos_tol
                                           and res.ori_residual <= gate.ori_tol))

    best = evaluate(candidate)
    evals = 1
    steps = [0.05, 0.05, 0.1]
    terminal = (0.001, 0.001, 0.01)
    while evals < max_evals and any(s >= t for s, t in zip(steps, terminal)):
        improved = False
        for dim in range(3):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                delta = [0.0, 0.0, 0.0]
                delta[dim] = sign * steps[dim]
                trial = SE2(x=best.base.x + delta[0], y=best.base.y + delta[1],
                            yaw=geo.wrap_angle(best.base.yaw + delta[2]))
                result = evaluate(trial)
                evals += 1
                if result.cost < best.cost - 1e-12:
                    best = result
                    improved = True
        if not improved:
            steps = [s / 2.0 for s in steps]
    return best


# --- unimanual / action building -------------------------------------------------

def _offset_pose(framed: FramedPose, offset: geo.Vec3) -> FramedPose:
    p = framed.pose
    return FramedPose(pose=Pose(position=geo.vadd(p.position, offset),
                                orientation=p.orientation), frame=framed.frame)


def _skill_for(action_type: ActionType, skills: Sequence[Skill]) -> Skill:
    matches = sorted((s for s in skills if s.action_type is action_type),
                     key=lambda s: s.name)
    if not matches:
        raise MissingSkillTrajectory(
            f"no procedural trajectory for action type {action_type.name}")
    return matches[0]


def _anchor_relative(trajectory: EndEffectorTrajectory,
                     anchor_in_source: Pose) -> EndEffectorTrajectory:
    """Re-express keypoints (given in the skill's affordance frame) relative
    to the execution anchor pose expressed in that same frame."""
    inv = geo.invert((anchor_in_source.position, anchor_in_source.orientation))
    kps = []
    for kp in trajectory.keypoints:
        pos, ori = geo.compose(inv, (kp.pose.pose.position,
                                     kp.pose.pose.orientation))
        kps.append(TrajectoryKeypoint(
            pose=FramedPose(pose=Pose(position=pos, orientation=ori),
                            frame=KEYPOINT_FRAME),
            phase=kp.phase, hand_shape=kp.hand_shape,
            finger_joint_values=kp.finger_joint_values))
    return EndEffectorTrajectory(keypoints=tuple(kps))


def default_trajectory(hypothesis: ActionHypothesis,
                       skills: Sequence[Skill]) -> EndEffectorTrajectory:
    """Per-action-type trajectory: close for grasps, open for places, a short
    advance for pushes; open/close/pour require a procedural skill."""
    at = hypothesis.action_type
    identity = FramedPose(pose=Pose(), frame=KEYPOINT_FRAME)
    if at is ActionType.Grasp:
        shape = hypothesis.shape_closed or "close"
        return EndEffectorTrajectory(
            keypoints=(TrajectoryKeypoint(pose=identity, phase=1.0,
                                          hand_shape=shape),))
    if at is ActionType.Place:
        shape = hypothesis.shape_open or "open"
        return EndEffectorTrajectory(
            keypoints=(TrajectoryKeypoint(pose=identity, phase=1.0,
                                          hand_shape=shape),))
    if at is ActionType.Push:
        rot = geo.qconj(hypothesis.pose.pose.orientation)
        local = geo.qrotate(rot, hypothesis.approach_axis)
        advanced = FramedPose(pose=Pose(position=geo.vscale(local, 0.05)),
                              frame=KEYPOINT_FRAME)
        return EndEffectorTrajectory(
            keypoints=(TrajectoryKeypoint(pose=advanced, phase=1.0),))
    skill = _skill_for(at, skills)
    if skill.learned_trajectory is None:
        raise MissingSkillTrajectory(
            f"skill {skill.name!r} has no learned trajectory")
    return _anchor_relative(skill.learned_trajectory, hypothesis.pose.pose)


def _build_unimanual(hypothesis: ActionHypothesis, arm: Arm,
                     config: PipelineConfig, skills: Sequence[Skill],
                     execution_pose: Optional[FramedPose] = None) -> Unimanual:
    pose = execution_pose if execution_pose is not None else hypothesis.pose
    pre_offset = geo.vscale(hypothesis.approach_axis,
                            -config.placement.pre_distance)
    pre = _offset_pose(pose, pre_offset)
    if hypothesis.action_type is ActionType.Grasp:
        retract: Optional[FramedPose] = None  # filled by caller in global frame
    else:
        retract = _offset_pose(pose, pre_offset)
    return Unimanual(
        end_effector_name=arm.name,
        execution_pose=pose,
        trajectory=default_trajectory(hypothesis, skills),
        force_threshold=config.placement.force_threshold,
        pre_pose=pre,
        retract_pose=retract,
        object_ref=hypothesis.target_object_id,
    )


def _grasp_retract(exec_global: Pose) -> FramedPose:
    # straight lift: +10 cm global z, fixed at parameterization time because
    # the grasped object moves with the hand afterwards
    return FramedPose(pose=Pose(position=geo.vadd(exec_global.position,
                                                  (0.0, 0.0, 0.10)),
                                orientation=exec_global.orientation),
                      frame="global")


def _with_retract(unimanual: Unimanual, hypothesis: ActionHypothesis,
                  exec_global: Pose) -> Unimanual:
    if hypothesis.action_type is not ActionType.Grasp:
        return unimanual
    return Unimanual(
        end_effector_name=unimanual.end_effector_name,
        execution_pose=unimanual.execution_pose,
        trajectory=unimanual.trajectory,
        force_threshold=unimanual.force_threshold,
        pre_pose=unimanual.pre_pose,
        retract_pose=_grasp_retract(exec_global),
        object_ref=unimanual.object_ref,
    )


def _whole_action_reachable(arm: Arm, base: SE2, q_seed: Sequence[float],
                            unimanual: Unimanual, exec_global: Pose,
                            scene: Scene) -> bool:
    """Probe pre/retract poses and a sample of trajectory keypoints from a
    candidate base; the execution pose is assumed already verified."""
    targets: List[Pose] = []
    for framed in (unimanual.pre_pose, unimanual.retract_pose):
        if framed is not None:
            targets.append(resolve_frame(scene, framed))
    keypoints = unimanual.trajectory.keypoints
    indices = sorted({len(keypoints) - 1,
                      *range(0, len(keypoints), max(1, len(keypoints) // 12))})
    anchor = (exec_global.position, exec_global.orientation)
    for i in indices:
        kp = keypoints[i].pose.pose
        targets.append(Pose(*geo.compose(anchor, (kp.position, kp.orientation))))
    opts = IKOptions()
    for target in targets:
        local = _target_in_base(base, target)
        res = ik_seeds(arm.chain, local,
                       (q_seed, *seed_configurations(arm.chain,
                                                     arm.home_config())), opts)
        if not res.converged:
            return False
    return True


def chain_reach(chain: SerialChain) -> float:
    """Upper bound on the chain's reach from its base transform."""
    total = geo.vnorm(chain.tcp.position)
    for joint in chain.joints:
        total += geo.vnorm(joint.origin.position)
        if joint.type.name == "Prismatic":
            total += max(abs(joint.limits[0]), abs(joint.limits[1]))
    return total


def choose_placement(arm: Arm, unimanual: Unimanual, exec_global: Pose,
                     robot: RobotDescription, scene: Scene,
                     config: PipelineConfig = PipelineConfig(),
                     current_base: SE2 = SE2()) -> RefinedPlacement:
    """Sample the annulus and refine seeds until one placement reaches the
    execution pose exactly and can cover the rest of the action (pre/retract
    poses, trajectory keypoints); falls back to the best gate-level result."""
    gate = config.placement.ik_gate_factor * IKOptions().pos_tol
    candidates = sample_placements(
        scene, exec_global, robot, n=config.placement.sample_count,
        current_base=current_base,
        annulus=(config.placement.annulus_min, config.placement.annulus_max))
    # spread the refinement seeds over the travel-ordered candidates:
    # nearest first, then a deterministic stride across the rest
    limit = config.placement.max_refine_candidates
    stride = max(1, len(candidates) // limit)
    seeds = candidates[::stride][:limit]
    fallback: Optional[RefinedPlacement] = None
    for seed in seeds:
        refined = refine_placement(seed, exec_global, arm, scene, robot,
                                   config.placement.weights)
        if refined.converged and _whole_action_reachable(
                arm, refined.base, refined.q, unimanual, exec_global, scene):
            return refined
        if refined.pos_residual <= gate and (
                fallback is None
                or refined.pos_residual < fallback.pos_residual):
            fallback = refined
    if fallback is None:
        raise NoIKSolution(
            f"arm {arm.name}: refined IK residual above {gate:.4f} m")
    return fallback


def parameterize(hypothesis: ActionHypothesis, robot: RobotDescription,
                 scene: Scene, config: PipelineConfig = PipelineConfig(),
                 skills: Sequence[Skill] = (),
                 current_base: SE2 = SE2(),
                 attachments: Optional[Mapping[str, "Attachment"]] = None
                 ) -> List[ExecutableAction]:
    """One executable action per admissible arm.

    The execution pose stays in the hypothesis's abstract frame so execution
    can re-resolve it against the live scene; the base pose comes from
    annulus sampling plus local refinement. Arms whose best placement leaves
    an IK residual above the gate are skipped; if no arm survives, the last
    error is raised.

    Place hypotheses name the desired pose of the *object*; when the target
    object is currently attached (``attachments``: arm name to attachment),
    only the holding arm is admissible and its TCP target derives from the
    desired object pose through the live grasp transform.
    """
    arms = robot.arms_for_side(hypothesis.side_hint)
    exec_override: Optional[FramedPose] = None
    if (hypothesis.action_type is ActionType.Place and attachments
            and hypothesis.target_object_id is not None):
        holder = [(name, att) for name, att in attachments.items()
                  if att.object_id == hypothesis.target_object_id]
        if holder:
            arm_name, attachment = holder[0]
            arms = tuple(a for a in arms if a.name == arm_name)
            grasp_inv = geo.invert((attachment.grasp_transform.position,
                                    attachment.grasp_transform.orientation))
            object_target = resolve_frame(scene, hypothesis.pose)
            tcp = geo.compose((object_target.position,
                               object_target.orientation), grasp_inv)
            exec_override = FramedPose(pose=Pose(position=tcp[0],
                                                 orientation=tcp[1]),
                                       frame="global")
    if not arms:
        return []
    exec_global = (resolve_frame(scene, hypothesis.pose)
                   if exec_override is None else exec_override.pose)
    actions: List[ExecutableAction] = []
    last_error: Optional[PlacementError] = None
    for arm in arms:
        unimanual = _with_retract(
            _build_unimanual(hypothesis, arm, config, skills, exec_override),
            hypothesis, exec_global)
        try:
            chosen = choose_placement(arm, unimanual, exec_global, robot,
                                      scene, config, current_base)
        except PlacementError as exc:
            last_error = exc
            continue
        actions.append(ExecutableAction(
            id=f"{hypothesis.id}.{arm.name}",
            robot_name=robot.name,
            base_pose=chosen.base,
            unimanuals=(unimanual,),
            source_hypothesis_ids=(hypothesis.id,),
        ))
    if not actions and last_error is not None:
        raise last_error
    return actions


def parameterize_bimanual(hypo_left: ActionHypothesis,
                          hypo_right: ActionHypothesis,
                          robot: RobotDescription, scene: Scene,
                          config: PipelineConfig = PipelineConfig(),
                          skills: Sequence[Skill] = (),
                          current_base: SE2 = SE2()) -> ExecutableAction:
    """Combine two one-hand hypotheses into a single two-arm action with a
    platform placement centered between the hands."""
    left_arms = [a for a in robot.arms_for_side(hypo_left.side_hint)
                 if a.handedness is SideHint.Left]
    right_arms = [a for a in robot.arms_for_side(hypo_right.side_hint)
                  if a.handedness is SideHint.Right]
    if not left_arms or not right_arms:
        raise NoIKSolution("robot lacks admissible left/right arm pair")
    left_arm, right_arm = left_arms[0], right_arms[0]

    exec_left = resolve_frame(scene, hypo_left.pose)
    exec_right = resolve_frame(scene, hypo_right.pose)
    span = geo.vnorm(geo.vsub(exec_left.position, exec_right.position))
    reach = max(chain_reach(left_arm.chain), chain_reach(right_arm.chain))
    if span > 2.0 * reach:
        raise HandsTooFarApart(
            f"hands {span:.2f} m apart exceeds 2 x arm reach {reach:.2f} m")

    mid = geo.vscale(geo.vadd(exec_left.position, exec_right.position), 0.5)
    approach_l = geo.qrotate(_frame_rotation(scene, hypo_left.pose),
                             hypo_left.approach_axis)
    approach_r = geo.qrotate(_frame_rotation(scene, hypo_right.pose),
                             hypo_right.approach_axis)
    mean = geo.vadd(approach_l, approach_r)
    horizontal = (mean[0], mean[1], 0.0)
    if geo.vnorm(horizontal) < 1e-9:
        # degenerate mean (e.g. both hands approach straight down): stand
        # perpendicular to the hand spread, with the left hand on the
        # robot's left
        spread = geo.vsub(exec_left.position, exec_right.position)
        horizontal = (spread[1], -spread[0], 0.0)
    if geo.vnorm(horizontal) < 1e-9:
        horizontal = (1.0, 0.0, 0.0)
    direction = geo.vunit(horizontal)
    standoff = config.placement.bimanual_standoff
    bx = mid[0] - standoff * direction[0]
    by = mid[1] - standoff * direction[1]
    base = SE2(x=bx, y=by, yaw=math.atan2(mid[1] - by, mid[0] - bx))

    gate = config.placement.ik_gate_factor * IKOptions().pos_tol
    unimanuals = []
    for hypothesis, arm, exec_global in ((hypo_left, left_arm, exec_left),
                                         (hypo_right, right_arm, exec_right)):
        local = _target_in_base(base, exec_global)
        res = ik_seeds(arm.chain, local,
                       seed_configurations(arm.chain, arm.home_config()))
        if res.pos_residual > gate:
            raise NoIKSolution(
                f"arm {arm.name}: IK residual {res.pos_residual:.4f} m from "
                f"bimanual base")
        unimanual = _build_unimanual(hypothesis, arm, config, skills)
        unimanuals.append(_with_retract(unimanual, hypothesis, exec_global))
    return ExecutableAction(
        id=f"bimanual.{hypo_left.id}+{hypo_right.id}",
        robot_name=robot.name,
        base_pose=base,
        unimanuals=tuple(unimanuals),
        source_hypothesis_ids=(hypo_left.id, hypo_right.id),
    )


def _frame_rotation(scene: Scene, framed: FramedPose) -> geo.Quat:
    """Rotation of the frame the pose lives in (identity for global)."""
    if framed.frame == "global":
        return geo.IDENTITY_QUAT
    anchor = resolve_frame(
        scene, FramedPose(pose=Pose(), frame=framed.frame))
    return anchor.orientation
