"""Scenario runner: reproducible end-to-end runs of the four tasks
(table clearing, bimanual box picking, drawer-skill transfer, pouring).

Scenarios are headless and deterministic; every run leaves a full audit
trail in memory and one episode file per executed action.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import geometry as geo
from .config import PipelineConfig, config_from_dict, load_config
from .discovery import (DiscoveryRequest, GraspDatabase,
                        discover_operator_click, load_grasp_db, target_places)
from .execution import WorldState, execute_action, initial_world
from .idf import (ActionHypothesis, ActionType, EndEffectorTrajectory,
                  ExecutableAction, ExecutedAction, FramedPose, Pose, SE2,
                  SideHint, TrajectoryKeypoint, Unimanual, serialize)
from .memory import (Memory, Segment, Skill, SkillFile, export_skill,
                     import_skill, save_skill_file, skill_from_trajectory)
from .pipeline import Pipeline
from .placement import (KEYPOINT_FRAME, MissingSkillTrajectory,
                        choose_placement, parameterize, parameterize_bimanual)
from .robot import RobotDescription, load_robot
from .scene import (ObjectInstance, PointCloud, Scene, common_place_volume,
                    load_scene, sample_box_surface)
from .transfer import (Demonstration, RelativeMotion, adapt_motion,
                       extract_relative_motion, ingest_demonstration,
                       load_demonstration, mirror_trajectory)
from .validation import select_best, validate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_VALID_ACTION = 3
EXIT_EXECUTION_FAILURE = 4
EXIT_TRANSFER_FAILURE = 5

TASKS = ("TableClearing", "BoxPickingBimanual", "DrawerTransfer", "Pour")


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    task: str
    robot_file: Path
    scene_file: Path
    grasp_db_file: Optional[Path] = None
    known_classes: Optional[Tuple[str, ...]] = None
    clicks_file: Optional[Path] = None
    robot2_file: Optional[Path] = None
    scene2_file: Optional[Path] = None
    demo_file: Optional[Path] = None
    reference_file: Optional[Path] = None
    config_overrides: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ScenarioError(f"unknown task {self.task!r}")


def load_scenario(path: "str | Path") -> Scenario:
    path = Path(path)
    raw = json.loads(path.read_text())
    base = path.parent

    def rel(key: str) -> Optional[Path]:
        return (base / raw[key]).resolve() if key in raw else None

    try:
        scenario = Scenario(
            name=str(raw["name"]),
            task=str(raw["task"]),
            robot_file=(base / raw["robotFile"]).resolve(),
            scene_file=(base / raw["sceneFile"]).resolve(),
            grasp_db_file=rel("graspDbFile"),
            known_classes=tuple(raw["knownClasses"]) if "knownClasses" in raw else None,
            clicks_file=rel("clicksFile"),
            robot2_file=rel("robot2File"),
            scene2_file=rel("scene2File"),
            demo_file=rel("demoFile"),
            reference_file=rel("referenceFile"),
            config_overrides=raw.get("config", {}),
        )
    except KeyError as exc:
        raise ScenarioError(f"scenario file missing field {exc}") from exc
    for p in (scenario.robot_file, scenario.scene_file, scenario.grasp_db_file,
              scenario.clicks_file, scenario.robot2_file, scenario.scene2_file,
              scenario.demo_file, scenario.reference_file):
        if p is not None and not p.exists():
            raise ScenarioError(f"referenced file does not exist: {p}")
    return scenario


@dataclass
class ScenarioResult:
    exit_code: int
    episodes: List[ExecutedAction]
    memory: Memory
    detail: str = ""
    memories: Dict[str, Memory] = field(default_factory=dict)


def apply_known_classes(scene: Scene, known: Optional[Sequence[str]]) -> Scene:
    """Per-robot recognition: only listed classes count as known."""
    if known is None:
        return scene
    known_set = set(known)
    objects = tuple(replace_known(o, o.object_class in known_set)
                    for o in scene.objects)
    return Scene(objects=objects, static_boxes=scene.static_boxes,
                 static_box_names=scene.static_box_names,
                 common_places=scene.common_places,
                 place_assignments=scene.place_assignments, cloud=scene.cloud)


def replace_known(obj: ObjectInstance, known: bool) -> ObjectInstance:
    return ObjectInstance(id=obj.id, object_class=obj.object_class,
                          pose=obj.pose, collision_box=obj.collision_box,
                          known=known, affordance_frames=obj.affordance_frames,
                          support_height=obj.support_height, fixed=obj.fixed)


def synthesize_cloud(scene: Scene, object_ids: Sequence[str],
                     spacing: float = 0.012,
                     viewpoint: geo.Vec3 = (0.0, 0.0, 1.8)) -> PointCloud:
    """Ground-truth scan stand-in: labeled surface samples of the given
    objects at their current poses."""
    points: List[np.ndarray] = []
    labels: List[int] = []
    for label, object_id in enumerate(object_ids):
        box = scene.object_by_id(object_id).global_box()
        pts = sample_box_surface(box, spacing)
        points.append(pts)
        labels.extend([label] * len(pts))
    if not points:
        return PointCloud(points=np.zeros((0, 3)), viewpoint=viewpoint)
    return PointCloud(points=np.vstack(points), labels=np.array(labels),
                      viewpoint=viewpoint)


def with_cloud(scene: Scene, cloud: Optional[PointCloud]) -> Scene:
    return Scene(objects=scene.objects, static_boxes=scene.static_boxes,
                 static_box_names=scene.static_box_names,
                 common_places=scene.common_places,
                 place_assignments=scene.place_assignments, cloud=cloud)


def write_episode(out_dir: Path, run_id: str, episode: ExecutedAction) -> Path:
    directory = out_dir / "episodes" / run_id
    directory.mkdir(parents=True, exist_ok=True)
    safe = episode.id.replace("/", "_").replace(":", "_")
    path = directory / f"{safe}.executed.idf.json"
    path.write_text(serialize(episode))
    return path


def object_at_target(scene: Scene, obj: ObjectInstance) -> bool:
    for place in target_places(scene, obj):
        volume = common_place_volume(scene, place)
        if volume.contains(obj.pose.position):
            return True
    return False


def _setup(scenario: Scenario) -> Tuple[RobotDescription, Scene,
                                        GraspDatabase, PipelineConfig, Memory]:
    robot = load_robot(scenario.robot_file)
    scene = apply_known_classes(load_scene(scenario.scene_file),
                                scenario.known_classes)
    grasp_db = (load_grasp_db(scenario.grasp_db_file)
                if scenario.grasp_db_file else GraspDatabase())
    config = config_from_dict(scenario.config_overrides)
    memory = Memory()
    memory.commit(Segment.Prior, robot, entity_id=f"robot.{robot.name}")
    memory.commit(Segment.Prior, grasp_db, entity_id="graspDatabase")
    memory.seal_prior()
    return robot, scene, grasp_db, config, memory


# --- table clearing -----------------------------------------------------------

def run_table_clearing(scenario: Scenario, out_dir: Path) -> ScenarioResult:
    robot, scene, grasp_db, config, memory = _setup(scenario)
    pipeline = Pipeline(robot, memory, grasp_db, config,
                        world=initial_world(scene, robot))
    episodes: List[ExecutedAction] = []
    max_rounds = 4 * len(scene.objects) + 4

    for _ in range(max_rounds):
        scene_now = pipeline.world.scene
        held = {a.object_id for a in pipeline.world.attachments.values()}
        remaining_known = [o for o in scene_now.objects
                           if o.known and not o.fixed and o.id not in held
                           and not object_at_target(scene_now, o)]
        remaining_unknown = [o for o in scene_now.objects
                             if not o.known and not o.fixed and o.id not in held
                             and not object_at_target(scene_now, o)]
        if not remaining_known and not remaining_unknown:
            break

        # known objects take priority over unknown ones
        if remaining_known:
            ids = {o.id for o in remaining_known}
            request = DiscoveryRequest(action_type=ActionType.Grasp,
                                       scene=scene_now, robot=robot,
                                       strategy_names=("known",))
        else:
            ids = {o.id for o in remaining_unknown}
            cloud = synthesize_cloud(scene_now, sorted(ids))
            pipeline.world = replace(pipeline.world,
                                     scene=with_cloud(scene_now, cloud))
            request = DiscoveryRequest(action_type=ActionType.Grasp,
                                       scene=pipeline.world.scene, robot=robot,
                                       strategy_names=("unknownOOBB",))
        grasp_run = pipeline.tick(
            request, hypothesis_filter=lambda h: h.target_object_id in ids)
        episodes.append(grasp_run.episode)
        write_episode(out_dir, scenario.name, grasp_run.episode)
        if grasp_run.episode.result.name != "Success":
            return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                                  detail=f"grasp failed: {grasp_run.episode.id}")

        held_now = [a.object_id for a in pipeline.world.attachments.values()]
        if not held_now:
            return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                                  detail="grasp succeeded but nothing attached")
        target_id = held_now[0]
        place_request = DiscoveryRequest(action_type=ActionType.Place,
                                         scene=pipeline.world.scene, robot=robot,
                                         strategy_names=("commonPlace",),
                                         target_object_id=target_id)
        place_run = pipeline.tick(place_request)
        episodes.append(place_run.episode)
        write_episode(out_dir, scenario.name, place_run.episode)
        if place_run.episode.result.name != "Success":
            return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                                  detail=f"place failed: {place_run.episode.id}")

    scene_final = pipeline.world.scene
    off_target = [o.id for o in scene_final.objects
                  if not o.fixed and not object_at_target(scene_final, o)]
    if off_target:
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail=f"objects left off target: {off_target}")
    return ScenarioResult(EXIT_OK, episodes, memory)


# --- bimanual box picking -------------------------------------------------------

def load_clicks(path: Path) -> List[Tuple[geo.Vec3, ActionType]]:
    raw = json.loads(path.read_text())
    out = []
    for row in raw["clicks"]:
        out.append((geo.vec3(row["point"]),
                    ActionType[row.get("actionType", "Grasp")]))
    return out


def _current_tcp(world: WorldState, arm_name: str) -> Pose:
    tcp = world.tcp_poses.get(arm_name)
    if tcp is None:
        raise ScenarioError(f"no TCP state for arm {arm_name!r}")
    return tcp


def _bimanual_place_hypotheses(world: WorldState, target_center: geo.Vec3,
                               arms: Tuple[str, str],
                               object_id: str) -> Tuple[ActionHypothesis, ...]:
    """Release poses above the target: current grasp geometry translated so
    the held object's center lands on the target center."""
    held_obj = world.scene.object_by_id(object_id)
    offset = geo.vsub(target_center, held_obj.pose.position)
    out = []
    for i, arm_name in enumerate(arms):
        tcp = _current_tcp(world, arm_name)
        pose = Pose(position=geo.vadd(tcp.position, offset),
                    orientation=tcp.orientation)
        out.append(ActionHypothesis(
            id=f"bimanualPlace.{object_id}.{arm_name}",
            action_type=ActionType.Place,
            pose=FramedPose(pose=pose, frame="global"),
            approach_axis=(0.0, 0.0, -1.0),
            provenance="operator",
            confidence=1.0,
            target_object_id=object_id,
            side_hint=SideHint.Left if i == 0 else SideHint.Right,
        ))
    return tuple(out)


def run_bimanual(scenario: Scenario, out_dir: Path) -> ScenarioResult:
    robot, scene, grasp_db, config, memory = _setup(scenario)
    if scenario.clicks_file is None:
        return ScenarioResult(EXIT_CONFIG, [], memory,
                              detail="bimanual scenario needs a clicks file")
    clicks = load_clicks(scenario.clicks_file)
    if len(clicks) < 2:
        return ScenarioResult(EXIT_CONFIG, [], memory,
                              detail="need two clicks for a bimanual grasp")
    pipeline = Pipeline(robot, memory, grasp_db, config,
                        world=initial_world(scene, robot))
    episodes: List[ExecutedAction] = []

    seeds = [discover_operator_click(scene, point, action_type, robot,
                                     config.discovery)
             for point, action_type in clicks[:2]]
    # higher-y click pairs with the left hand (robot faces +x initially)
    seeds.sort(key=lambda h: -h.pose.pose.position[1])
    hypo_left = replace(seeds[0], side_hint=SideHint.Left)
    hypo_right = replace(seeds[1], side_hint=SideHint.Right)
    grasp_action = parameterize_bimanual(hypo_left, hypo_right, robot, scene,
                                         config,
                                         current_base=pipeline.world.robot_base)
    grasp_run = pipeline.tick_actions([hypo_left, hypo_right], [grasp_action])
    episodes.append(grasp_run.episode)
    write_episode(out_dir, scenario.name, grasp_run.episode)
    if grasp_run.episode.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail="bimanual grasp failed")

    held = [a.object_id for a in pipeline.world.attachments.values()]
    if not held:
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail="bimanual grasp attached nothing")
    object_id = held[0]
    drop = scene.place_by_label("dropZone")
    if drop is None:
        return ScenarioResult(EXIT_CONFIG, [], memory,
                              detail="scene lacks a dropZone common place")
    volume = common_place_volume(scene, drop)
    held_box = pipeline.world.scene.object_by_id(object_id).global_box()
    height = float(held_box.corners()[:, 2].max()
                   - held_box.corners()[:, 2].min())
    bottom = float(volume.corners()[:, 2].min())
    target_center = (volume.center[0], volume.center[1],
                     bottom + height / 2.0 + config.discovery.place_drop_height)
    arm_names = (grasp_action.unimanuals[0].end_effector_name,
                 grasp_action.unimanuals[1].end_effector_name)
    place_left, place_right = _bimanual_place_hypotheses(
        pipeline.world, target_center, arm_names, object_id)
    place_action = parameterize_bimanual(place_left, place_right, robot,
                                         pipeline.world.scene, config,
                                         current_base=pipeline.world.robot_base)
    place_run = pipeline.tick_actions([place_left, place_right], [place_action])
    episodes.append(place_run.episode)
    write_episode(out_dir, scenario.name, place_run.episode)
    if place_run.episode.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail="bimanual place failed")
    return ScenarioResult(EXIT_OK, episodes, memory)


# --- drawer-skill transfer --------------------------------------------------------

DRAWER_SKILL_NAME = "openDrawer"


def open_drawer_hypothesis(drawer_id: str, side: SideHint) -> ActionHypothesis:
    """Execution pose at the drawer's handle affordance frame (identity in
    that frame, so learned keypoints stay bit-exact in it)."""
    return ActionHypothesis(
        id=f"open.{drawer_id}",
        action_type=ActionType.Open,
        pose=FramedPose(pose=Pose(), frame=f"affordance:{drawer_id}/handle"),
        approach_axis=(0.0, 0.0, 1.0),  # handle frame z points into the drawer
        provenance="prior",
        confidence=1.0,
        target_object_id=drawer_id,
        side_hint=side,
    )


def _run_drawer_once(robot: RobotDescription, scene: Scene, memory: Memory,
                     config: PipelineConfig, drawer_id: str, side: SideHint,
                     skill: Optional[Skill]) -> Tuple[ExecutedAction, Pipeline]:
    pipeline = Pipeline(robot, memory, GraspDatabase(), config,
                        world=initial_world(scene, robot))
    hypothesis = open_drawer_hypothesis(drawer_id, side)
    skills = [skill] if skill is not None else []
    actions = parameterize(hypothesis, robot, scene, config, skills=skills,
                           current_base=pipeline.world.robot_base)
    run = pipeline.tick_actions([hypothesis], actions)
    return run.episode, pipeline


def run_drawer_transfer(scenario: Scenario, out_dir: Path) -> ScenarioResult:
    if (scenario.robot2_file is None or scenario.scene2_file is None
            or scenario.demo_file is None):
        return ScenarioResult(EXIT_CONFIG, [], Memory(),
                              detail="drawer transfer needs robot2File, "
                                     "scene2File and demoFile")
    robot_a = load_robot(scenario.robot_file)
    scene_a = load_scene(scenario.scene_file)
    robot_b = load_robot(scenario.robot2_file)
    scene_b = load_scene(scenario.scene2_file)
    config = config_from_dict(scenario.config_overrides)
    memory_a = Memory()
    memory_b = Memory()
    memory_a.seal_prior()
    memory_b.seal_prior()
    episodes: List[ExecutedAction] = []

    # robot A: no trajectory known -> kinesthetic teaching fills the gap
    taught_side = SideHint.Right
    hypothesis = open_drawer_hypothesis("drawerA", taught_side)
    try:
        parameterize(hypothesis, robot_a, scene_a, config)
        return ScenarioResult(EXIT_TRANSFER_FAILURE, [], memory_a,
                              detail="expected MissingSkillTrajectory before "
                                     "teaching")
    except MissingSkillTrajectory:
        pass
    demo = load_demonstration(scenario.demo_file)
    trajectory = ingest_demonstration(demo)
    skill = skill_from_trajectory(DRAWER_SKILL_NAME, ActionType.Open,
                                  trajectory, robot_a.name, taught_side)
    memory_a.commit(Segment.Procedural,
                    SkillFile(skill=skill,
                              provenance=((robot_a.name, memory_a.now()),)),
                    entity_id=skill.name)
    episode_a, _ = _run_drawer_once(robot_a, scene_a, memory_a, config,
                                    "drawerA", taught_side, skill)
    episodes.append(episode_a)
    write_episode(out_dir, f"{scenario.name}.a", episode_a)
    if episode_a.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory_a,
                              detail="robot A drawer execution failed")
    skill_file = export_skill(memory_a, DRAWER_SKILL_NAME)
    skill_path = out_dir / f"{DRAWER_SKILL_NAME}.skill.json"
    out_dir.mkdir(parents=True, exist_ok=True)
    save_skill_file(skill_path, skill_file)

    # robot B: import, mirror for the other hand, execute at its own drawer
    imported = import_skill(memory_b, skill_file, robot_b)
    target_side = SideHint.Left
    if target_side is not imported.source_handedness:
        mirrored = Skill(
            name=imported.name, action_type=imported.action_type,
            strategy_bundle=imported.strategy_bundle,
            source_robot=imported.source_robot,
            source_handedness=target_side,
            learned_trajectory=mirror_trajectory(imported.learned_trajectory),
            shape_names_used=imported.shape_names_used)
    else:
        mirrored = imported
    episode_b, _ = _run_drawer_once(robot_b, scene_b, memory_b, config,
                                    "drawerB", target_side, mirrored)
    episodes.append(episode_b)
    write_episode(out_dir, f"{scenario.name}.b", episode_b)
    if episode_b.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory_b,
                              detail="robot B drawer execution failed")
    result = ScenarioResult(EXIT_OK, episodes, memory_a)
    result.memories = {"a": memory_a, "b": memory_b}
    return result


# --- pouring ---------------------------------------------------------------------

def pour_unimanual(world: WorldState, arm_name: str, jug_id: str,
                   mug_id: str, pour_frame: str, fill_frame: str,
                   adapted: RelativeMotion) -> Unimanual:
    """Convert an adapted pour-in-fill motion into an executable trajectory
    for the arm currently holding the jug (affordance-frame composition)."""
    attachment = world.attachments.get(arm_name)
    if attachment is None or attachment.object_id != jug_id:
        raise ScenarioError(f"arm {arm_name!r} does not hold {jug_id!r}")
    scene = world.scene
    jug = scene.object_by_id(jug_id)
    mug = scene.object_by_id(mug_id)
    fill_local = mug.affordance_frames[fill_frame]
    pour_local = jug.affordance_frames[pour_frame]
    fill_global = geo.compose((mug.pose.position, mug.pose.orientation),
                              (fill_local.position, fill_local.orientation))
    pour_inv = geo.invert((pour_local.position, pour_local.orientation))
    grasp_inv = geo.invert((attachment.grasp_transform.position,
                            attachment.grasp_transform.orientation))

    def tcp_at(pose: Pose) -> Tuple[geo.Vec3, geo.Quat]:
        pour_global = geo.compose(fill_global, (pose.position, pose.orientation))
        jug_pose = geo.compose(pour_global, pour_inv)
        return geo.compose(jug_pose, grasp_inv)

    phases = adapted.phases()
    anchor = tcp_at(adapted.samples[0][1])
    anchor_inv = geo.invert(anchor)
    keypoints: List[TrajectoryKeypoint] = [TrajectoryKeypoint(
        pose=FramedPose(pose=Pose(), frame=KEYPOINT_FRAME), phase=0.0)]
    for (_, pose), phase in zip(adapted.samples[1:], phases[1:]):
        rel = geo.compose(anchor_inv, tcp_at(pose))
        keypoints.append(TrajectoryKeypoint(
            pose=FramedPose(pose=Pose(position=rel[0], orientation=rel[1]),
                            frame=KEYPOINT_FRAME),
            phase=phase))
    return Unimanual(
        end_effector_name=arm_name,
        execution_pose=FramedPose(pose=Pose(position=anchor[0],
                                            orientation=anchor[1]),
                                  frame="global"),
        trajectory=EndEffectorTrajectory(keypoints=tuple(keypoints)),
        force_threshold=8.0,
    )


def run_pour(scenario: Scenario, out_dir: Path) -> ScenarioResult:
    if scenario.reference_file is None:
        return ScenarioResult(EXIT_CONFIG, [], Memory(),
                              detail="pour scenario needs a referenceFile")
    robot, scene, grasp_db, config, memory = _setup(scenario)
    pipeline = Pipeline(robot, memory, grasp_db, config,
                        world=initial_world(scene, robot))
    episodes: List[ExecutedAction] = []

    # grasp the jug via prior knowledge
    request = DiscoveryRequest(action_type=ActionType.Grasp, scene=scene,
                               robot=robot, strategy_names=("known",))
    grasp_run = pipeline.tick(
        request, hypothesis_filter=lambda h: h.target_object_id == "jug1")
    episodes.append(grasp_run.episode)
    write_episode(out_dir, scenario.name, grasp_run.episode)
    if grasp_run.episode.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail="jug grasp failed")

    # reference pour motion, adapted to this jug/mug pair
    reference_demo = load_demonstration(scenario.reference_file)
    reference = extract_relative_motion(
        [(t, p) for t, p, _ in reference_demo.samples],
        reference_demo.affordance_frame_global,
        moving_name="pour", reference_name="fill")
    ref_start = reference.samples[0][1]
    new_start = Pose(position=geo.vadd(ref_start.position, (0.02, 0.0, 0.01)),
                     orientation=ref_start.orientation)
    curve_mid = reference.samples[len(reference.samples) // 2][1]
    via = (0.5, curve_mid)
    adapted = adapt_motion(reference, new_start, via_points=(via,),
                           preserve_end=True)
    memory.commit(Segment.Working, adapted, entity_id="pour.adapted")

    arm_name = next(iter(pipeline.world.attachments))
    unimanual = pour_unimanual(pipeline.world, arm_name, "jug1", "mug1",
                               "pour", "fill", adapted)
    arm = robot.arm_by_name(arm_name)
    exec_global = unimanual.execution_pose.pose
    chosen = choose_placement(arm, unimanual, exec_global, robot,
                              pipeline.world.scene, config,
                              current_base=pipeline.world.robot_base)
    action = ExecutableAction(
        id=f"pour.jug1.{arm_name}", robot_name=robot.name,
        base_pose=chosen.base, unimanuals=(unimanual,),
        source_hypothesis_ids=())
    pour_run = pipeline.tick_actions([], [action])
    episodes.append(pour_run.episode)
    write_episode(out_dir, scenario.name, pour_run.episode)
    if pour_run.episode.result.name != "Success":
        return ScenarioResult(EXIT_EXECUTION_FAILURE, episodes, memory,
                              detail="pour execution failed")
    return ScenarioResult(EXIT_OK, episodes, memory)


RUNNERS = {
    "TableClearing": run_table_clearing,
    "BoxPickingBimanual": run_bimanual,
    "DrawerTransfer": run_drawer_transfer,
    "Pour": run_pour,
}


def run(scenario: Scenario, out_dir: "str | Path") -> ScenarioResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runner = RUNNERS[scenario.task]
    result = runner(scenario, out)
    (out / "memory").mkdir(parents=True, exist_ok=True)
    if result.memories:
        for tag, mem in result.memories.items():
            mem.snapshot(out / "memory" / tag)
    else:
        result.memory.snapshot(out / "memory")
    return result
