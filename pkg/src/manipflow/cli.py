"""Command-line toolbelt: scenario runs, single pipeline steps, the memory
service, replay export and format checking.

Exit codes: 0 ok, 2 configuration error, 3 no valid action, 4 execution
failure, 5 transfer failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .discovery import DiscoveryRequest, GraspDatabase, load_grasp_db
from .execution import initial_world, replay_csv
from .idf import (ActionType, ExecutedAction, IdfError, canonical_json,
                  deserialize, from_jsonable, serialize, to_jsonable)
from .memory import (Memory, MissingShapeName, Segment, UnknownSkill,
                     export_skill, import_skill, load_skill_file,
                     save_skill_file)
from .pipeline import Pipeline
from .robot import load_robot
from .scene import load_scene
from .scenarios import (EXIT_CONFIG, EXIT_EXECUTION_FAILURE,
                        EXIT_NO_VALID_ACTION, EXIT_OK, EXIT_TRANSFER_FAILURE,
                        ScenarioError, load_clicks, load_scenario, run)
from .service import ADDR_ENV_VAR, MemoryClient, default_address, serve
from .validation import NoValidAction


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--robot", required=True, help="robot description file")
    p.add_argument("--scene", required=True, help="scene file")
    p.add_argument("--grasps", help="grasp database file")
    p.add_argument("--config", help="pipeline config file")
    p.add_argument("--strategy", action="append", default=None,
                   help="discovery strategy (repeatable)")
    p.add_argument("--action-type", default="Grasp",
                   choices=[t.name for t in ActionType])
    p.add_argument("--target", help="target object id (place discovery)")
    p.add_argument("--click", nargs=3, type=float, metavar=("X", "Y", "Z"),
                   help="operator click point")
    p.add_argument("--clicks", help="scripted click file (first click used)")


def _build_pipeline(args) -> Pipeline:
    robot = load_robot(args.robot)
    scene = load_scene(args.scene)
    grasp_db = load_grasp_db(args.grasps) if args.grasps else GraspDatabase()
    config = load_config(args.config)
    memory = Memory()
    memory.commit(Segment.Prior, robot, entity_id=f"robot.{robot.name}")
    memory.commit(Segment.Prior, grasp_db, entity_id="graspDatabase")
    memory.seal_prior()
    return Pipeline(robot, memory, grasp_db, config,
                    world=initial_world(scene, robot))


def _request(args, pipeline: Pipeline) -> DiscoveryRequest:
    strategies = tuple(args.strategy or ["known"])
    click = None
    if args.click:
        click = tuple(args.click)
    elif args.clicks:
        rows = load_clicks(Path(args.clicks))
        if rows:
            click = rows[0][0]
    return DiscoveryRequest(
        action_type=ActionType[args.action_type],
        scene=pipeline.world.scene,
        robot=pipeline.robot,
        strategy_names=strategies,
        target_object_id=args.target,
        operator_click=click,
    )


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, json.JSONDecodeError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(scenario, args.out)
    if result.detail:
        print(result.detail, file=sys.stderr if result.exit_code else sys.stdout)
    for episode in result.episodes:
        print(f"{episode.id}: {episode.result.name}")
    return result.exit_code


def cmd_discover(args) -> int:
    pipeline = _build_pipeline(args)
    hypotheses = pipeline.run_discovery(_request(args, pipeline))
    print(json.dumps([to_jsonable(h) for h in hypotheses], indent=2,
                     sort_keys=True))
    return EXIT_OK


def cmd_plan(args) -> int:
    pipeline = _build_pipeline(args)
    hypotheses = pipeline.run_discovery(_request(args, pipeline))
    actions, error = pipeline.run_parameterization(hypotheses)
    if not actions:
        print(f"no executable action: {error}", file=sys.stderr)
        return EXIT_NO_VALID_ACTION
    reports = pipeline.run_validation(actions, hypotheses)
    try:
        best = pipeline.run_selection(actions, reports)
    except NoValidAction as exc:
        for report in exc.reports:
            for name, check in report.checks.items():
                if not check.passed:
                    print(f"{report.action_id}: {name} failed: {check.detail}",
                          file=sys.stderr)
        return EXIT_NO_VALID_ACTION
    print(serialize(best))
    return EXIT_OK


def cmd_validate(args) -> int:
    pipeline = _build_pipeline(args)
    hypotheses = pipeline.run_discovery(_request(args, pipeline))
    actions, error = pipeline.run_parameterization(hypotheses)
    if not actions:
        print(f"no executable action: {error}", file=sys.stderr)
        return EXIT_NO_VALID_ACTION
    for report in pipeline.run_validation(actions, hypotheses):
        print(serialize(report))
    return EXIT_OK


def cmd_execute(args) -> int:
    pipeline = _build_pipeline(args)
    hypotheses = pipeline.run_discovery(_request(args, pipeline))
    actions, error = pipeline.run_parameterization(hypotheses)
    if not actions:
        print(f"no executable action: {error}", file=sys.stderr)
        return EXIT_NO_VALID_ACTION
    reports = pipeline.run_validation(actions, hypotheses)
    try:
        best = pipeline.run_selection(actions, reports)
    except NoValidAction:
        return EXIT_NO_VALID_ACTION
    episode = pipeline.run_execution(best)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{episode.id.replace('/', '_')}.executed.idf.json"
    path.write_text(serialize(episode))
    print(f"{episode.id}: {episode.result.name} -> {path}")
    return EXIT_OK if episode.result.name == "Success" else EXIT_EXECUTION_FAILURE


def cmd_serve(args) -> int:
    memory = Memory.load(args.snapshot) if args.snapshot else Memory()
    robot = load_robot(args.robot) if args.robot else None
    host, port = default_address()
    if args.bind:
        host, _, port_text = args.bind.rpartition(":")
        host = host or "127.0.0.1"
        port = int(port_text)
    server = serve((host, port), memory, robot=robot)
    print(f"memory service on {server.address[0]}:{server.address[1]} "
          f"(override with --bind or {ADDR_ENV_VAR})")
    try:
        server._thread.join()  # runs until interrupted
    except KeyboardInterrupt:
        server.stop()
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        episode = deserialize(Path(args.episode).read_text(), ExecutedAction)
    except IdfError as exc:
        print(f"invalid episode file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    csv = replay_csv(episode)
    if args.csv:
        Path(args.csv).write_text(csv)
        print(f"wrote {args.csv}")
    else:
        print(csv, end="")
    return EXIT_OK


def cmd_skill_export(args) -> int:
    memory = Memory.load(args.memory)
    try:
        skill_file = export_skill(memory, args.name)
    except UnknownSkill as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TRANSFER_FAILURE
    save_skill_file(args.out, skill_file)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_skill_import(args) -> int:
    robot = load_robot(args.robot)
    memory = Memory.load(args.memory) if Path(args.memory).exists() else Memory()
    try:
        skill = import_skill(memory, load_skill_file(args.skill_file), robot)
    except MissingShapeName as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_TRANSFER_FAILURE
    memory.snapshot(args.memory)
    print(f"imported skill {skill.name!r} for {robot.name}")
    return EXIT_OK


def cmd_fmt_check(args) -> int:
    failures = 0
    for name in args.files:
        text = Path(name).read_text()
        try:
            entity = deserialize(text)
            print(f"{name}: ok ({type(entity).__name__})")
        except IdfError as exc:
            print(f"{name}: INVALID: {exc}")
            failures += 1
    return EXIT_CONFIG if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="manipflow",
        description="Affordance-based mobile manipulation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file end to end")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_run)

    for name, func, help_text in (
            ("discover", cmd_discover, "run discovery strategies"),
            ("plan", cmd_plan, "discover, parameterize, validate, select"),
            ("validate", cmd_validate, "print validation reports"),
            ("execute", cmd_execute, "plan and execute the best action")):
        p = sub.add_parser(name, help=help_text)
        _add_pipeline_args(p)
        if name == "execute":
            p.add_argument("--out", default="out")
        p.set_defaults(func=func)

    p = sub.add_parser("serve", help="serve a memory over TCP")
    p.add_argument("--bind", help="host:port (default env or 127.0.0.1:7471)")
    p.add_argument("--snapshot", help="memory snapshot directory to load")
    p.add_argument("--robot", help="robot for skill imports")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="emit the TCP pose stream of an episode")
    p.add_argument("episode")
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("skill", help="skill transfer")
    skill_sub = p.add_subparsers(dest="skill_command", required=True)
    pe = skill_sub.add_parser("export")
    pe.add_argument("name")
    pe.add_argument("--memory", required=True, help="memory snapshot directory")
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_skill_export)
    pi = skill_sub.add_parser("import")
    pi.add_argument("skill_file")
    pi.add_argument("--robot", required=True)
    pi.add_argument("--memory", required=True,
                    help="memory snapshot directory (created if missing)")
    pi.set_defaults(func=cmd_skill_import)

    p = sub.add_parser("fmt-check", help="validate .idf.json files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_fmt_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
