"""Four-segment revisioned memory: prior, working, procedural, episodic.

An append-only store with strictly increasing revisions per entity id.
Commits run through a single writer lock; queries read immutable revisions
wait-free. The prior segment becomes read-only once sealed after startup.
Skill export/import realizes cross-robot transfer: trajectory geometry is
copied untouched, shape names resolve on the target robot at execution time.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .idf import (ActionType, EndEffectorTrajectory, SideHint, _check,
                  canonical_json, from_jsonable, register_type, to_jsonable)
from .robot import RobotDescription


class MemoryStoreError(Exception):
    pass


class ReadOnlySegment(MemoryStoreError):
    pass


class InvalidEntity(MemoryStoreError):
    pass


class UnknownSegment(MemoryStoreError):
    pass


class CorruptSnapshot(MemoryStoreError):
    pass


class UnknownSkill(MemoryStoreError):
    pass


class MissingShapeName(MemoryStoreError):
    def __init__(self, missing: Sequence[str]):
        self.missing = tuple(missing)
        super().__init__(f"target robot lacks shape names: {list(self.missing)}")


class Segment(Enum):
    Prior = "Prior"
    Working = "Working"
    Procedural = "Procedural"
    Episodic = "Episodic"


PIPELINE_STEPS = ("discovery", "parameterization", "validation", "selection",
                  "execution")


@dataclass(frozen=True)
class Skill:
    """Reference to executable behavior: the strategy choice per pipeline
    step plus an optional learned trajectory in the affordance frame."""

    name: str
    action_type: ActionType
    strategy_bundle: Mapping[str, str]
    source_robot: str
    source_handedness: SideHint
    learned_trajectory: Optional[EndEffectorTrajectory] = None
    shape_names_used: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy_bundle", dict(self.strategy_bundle))
        object.__setattr__(self, "shape_names_used", tuple(self.shape_names_used))
        _check(set(self.strategy_bundle) == set(PIPELINE_STEPS),
               "strategyBundle covers all five steps")
        trajectory_shapes = (set(self.learned_trajectory.shape_names())
                             if self.learned_trajectory is not None else set())
        _check(set(self.shape_names_used) <= trajectory_shapes,
               "shapeNamesUsed subset of trajectory shape names")

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "actionType": self.action_type.name,
            "strategyBundle": {k: self.strategy_bundle[k] for k in PIPELINE_STEPS},
            "sourceRobot": self.source_robot,
            "sourceHandedness": self.source_handedness.name,
            "shapeNamesUsed": list(self.shape_names_used),
        }
        if self.learned_trajectory is not None:
            d["learnedTrajectory"] = self.learned_trajectory.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "Skill":
        lt = d.get("learnedTrajectory")
        return cls(
            name=str(d["name"]),
            action_type=ActionType[d["actionType"]],
            strategy_bundle=dict(d["strategyBundle"]),
            source_robot=str(d["sourceRobot"]),
            source_handedness=SideHint[d["sourceHandedness"]],
            learned_trajectory=EndEffectorTrajectory.from_dict(lt)
            if lt is not None else None,
            shape_names_used=tuple(d.get("shapeNamesUsed", [])),
        )


def skill_from_trajectory(name: str, action_type: ActionType,
                          trajectory: EndEffectorTrajectory,
                          source_robot: str, source_handedness: SideHint,
                          strategy_bundle: Optional[Mapping[str, str]] = None
                          ) -> Skill:
    """Convenience constructor deriving shapeNamesUsed from the trajectory."""
    bundle = dict(strategy_bundle) if strategy_bundle else {
        "discovery": "known", "parameterization": "default",
        "validation": "default", "selection": "default", "execution": "sim",
    }
    return Skill(name=name, action_type=action_type, strategy_bundle=bundle,
                 source_robot=source_robot, source_handedness=source_handedness,
                 learned_trajectory=trajectory,
                 shape_names_used=tuple(dict.fromkeys(trajectory.shape_names())))


@dataclass(frozen=True)
class SkillFile:
    """A skill plus its transfer provenance chain, as persisted to disk."""

    skill: Skill
    provenance: Tuple[Tuple[str, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "provenance",
                           tuple((str(r), float(t)) for r, t in self.provenance))
        _check(len(self.provenance) >= 1, "provenance nonempty")

    def to_dict(self) -> dict:
        return {
            "skill": self.skill.to_dict(),
            "provenance": [{"robot": r, "timestamp": t}
                           for r, t in self.provenance],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SkillFile":
        return cls(
            skill=Skill.from_dict(d["skill"]),
            provenance=tuple((str(p["robot"]), float(p["timestamp"]))
                             for p in d["provenance"]),
        )


register_type(Skill)
register_type(SkillFile)


@dataclass(frozen=True)
class Entry:
    entity: Any
    revision: int
    committed_at: float


NotifyFn = Callable[[Segment, str, int], None]


class Memory:
    """Single-process memory with the four segments and an append-only log."""

    def __init__(self) -> None:
        self._segments: Dict[Segment, Dict[str, List[Entry]]] = {
            s: {} for s in Segment}
        self._lock = threading.RLock()
        self._tick = 0
        self._prior_sealed = False
        self._subscribers: List[NotifyFn] = []

    # -- lifecycle --------------------------------------------------------

    def seal_prior(self) -> None:
        """Freeze the prior segment; startup knowledge only from here on."""
        with self._lock:
            self._prior_sealed = True

    def now(self) -> float:
        """Logical commit clock (deterministic across runs)."""
        with self._lock:
            return float(self._tick)

    def subscribe(self, fn: NotifyFn) -> Callable[[], None]:
        """Register a commit listener; returns an unsubscribe callable.
        Listeners run inside the commit and must not block."""
        with self._lock:
            self._subscribers.append(fn)

        def unsubscribe() -> None:
            with self._lock:
                if fn in self._subscribers:
                    self._subscribers.remove(fn)
        return unsubscribe

    # -- commits ----------------------------------------------------------

    def commit(self, segment: Segment, entity: Any,
               entity_id: Optional[str] = None) -> int:
        """Append a new revision; previous revisions stay readable."""
        if not isinstance(segment, Segment):
            raise UnknownSegment(f"unknown segment {segment!r}")
        try:
            to_jsonable(entity)
        except Exception as exc:
            raise InvalidEntity(str(exc)) from exc
        if entity_id is None:
            entity_id = getattr(entity, "id", None) or getattr(entity, "name", None)
        if not entity_id:
            raise InvalidEntity("entity has no id and none was given")
        with self._lock:
            if segment is Segment.Prior and self._prior_sealed:
                raise ReadOnlySegment("prior segment is read-only after startup")
            history = self._segments[segment].setdefault(str(entity_id), [])
            revision = history[-1].revision + 1 if history else 1
            self._tick += 1
            history.append(Entry(entity=entity, revision=revision,
                                 committed_at=float(self._tick)))
            listeners = list(self._subscribers)
        for fn in listeners:
            fn(segment, str(entity_id), revision)
        return revision

    # -- queries ----------------------------------------------------------

    def query_rows(self, segment: Segment,
                   entity_type: "str | type | None" = None,
                   entity_id: Optional[str] = None,
                   revision: Optional[int] = None,
                   predicate: Optional[Mapping[str, Any]] = None
                   ) -> List[Tuple[str, Any, int]]:
        """Like ``query`` but rows also carry the entity id."""
        if not isinstance(segment, Segment):
            raise UnknownSegment(f"unknown segment {segment!r}")
        type_name = (entity_type if isinstance(entity_type, str) or entity_type is None
                     else entity_type.__name__)
        with self._lock:
            store = self._segments[segment]
            ids = [entity_id] if entity_id is not None else sorted(store)
            out: List[Tuple[str, Any, int]] = []
            for eid in ids:
                history = store.get(eid)
                if not history:
                    continue
                if revision is not None:
                    matches = [e for e in history if e.revision == revision]
                    if not matches:
                        continue
                    entry = matches[0]
                else:
                    entry = history[-1]
                if type_name is not None and type(entry.entity).__name__ != type_name:
                    continue
                if predicate:
                    d = to_jsonable(entry.entity)
                    if any(d.get(k) != v for k, v in predicate.items()):
                        continue
                out.append((eid, entry.entity, entry.revision))
            return out

    def query(self, segment: Segment, entity_type: "str | type | None" = None,
              entity_id: Optional[str] = None,
              revision: Optional[int] = None,
              predicate: Optional[Mapping[str, Any]] = None
              ) -> List[Tuple[Any, int]]:
        """Latest revision per id unless ``revision`` pins one; ordered by id."""
        return [(entity, rev) for _, entity, rev in self.query_rows(
            segment, entity_type, entity_id, revision, predicate)]

    def history(self, segment: Segment, entity_id: str) -> List[Entry]:
        with self._lock:
            return list(self._segments[segment].get(entity_id, []))

    # -- persistence ------------------------------------------------------

    def snapshot(self, directory: "str | Path") -> None:
        """One JSON file per segment, including full revision history."""
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        with self._lock:
            for segment in Segment:
                payload = {
                    "formatVersion": 1,
                    "segment": segment.name,
                    "entries": {
                        eid: [{"revision": e.revision,
                               "committedAt": e.committed_at,
                               "entity": to_jsonable(e.entity)}
                              for e in history]
                        for eid, history in sorted(
                            self._segments[segment].items())
                    },
                }
                (path / f"{segment.name.lower()}.json").write_text(
                    canonical_json(payload))

    @classmethod
    def load(cls, directory: "str | Path") -> "Memory":
        path = Path(directory)
        memory = cls()
        max_tick = 0
        for segment in Segment:
            file = path / f"{segment.name.lower()}.json"
            if not file.exists():
                raise CorruptSnapshot(f"missing segment file {file}")
            try:
                payload = json.loads(file.read_text())
            except json.JSONDecodeError as exc:
                raise CorruptSnapshot(f"{file}: {exc}") from exc
            for eid, rows in payload.get("entries", {}).items():
                history: List[Entry] = []
                last_rev = 0
                for row in rows:
                    rev = int(row["revision"])
                    if rev <= last_rev:
                        raise CorruptSnapshot(
                            f"entity {eid!r} in {segment.name}: revisions not "
                            f"strictly increasing at {rev}")
                    last_rev = rev
                    try:
                        entity = from_jsonable(row["entity"])
                    except Exception as exc:
                        raise CorruptSnapshot(f"entity {eid!r}: {exc}") from exc
                    committed = float(row["committedAt"])
                    max_tick = max(max_tick, int(committed))
                    history.append(Entry(entity=entity, revision=rev,
                                         committed_at=committed))
                memory._segments[segment][eid] = history
        memory._tick = max_tick
        return memory

    def segment_digest(self, segment: Segment) -> str:
        """Canonical text of a segment's full content (for equality checks)."""
        with self._lock:
            return canonical_json({
                eid: [{"revision": e.revision, "committedAt": e.committed_at,
                       "entity": to_jsonable(e.entity)} for e in history]
                for eid, history in sorted(self._segments[segment].items())
            })


# --- skill transfer ------------------------------------------------------------

def export_skill(memory: Memory, skill_name: str) -> SkillFile:
    rows = memory.query(Segment.Procedural, entity_type=SkillFile,
                        entity_id=skill_name)
    if not rows:
        raise UnknownSkill(f"no skill named {skill_name!r} in procedural memory")
    return rows[0][0]


def import_skill(memory: Memory, skill_file: SkillFile,
                 target_robot: RobotDescription) -> Skill:
    """Import a transferred skill: shape names must exist on the target (the
    values stay the target's own); trajectory geometry is copied untouched."""
    available = set()
    for arm in target_robot.arms:
        available.update(arm.end_effector.shape_table)
    missing = [n for n in skill_file.skill.shape_names_used
               if n not in available]
    if missing:
        raise MissingShapeName(missing)
    imported = SkillFile(
        skill=skill_file.skill,
        provenance=skill_file.provenance + ((target_robot.name, memory.now()),))
    memory.commit(Segment.Procedural, imported,
                  entity_id=skill_file.skill.name)
    return imported.skill


def save_skill_file(path: "str | Path", skill_file: SkillFile) -> None:
    Path(path).write_text(canonical_json(to_jsonable(skill_file)))


def load_skill_file(path: "str | Path") -> SkillFile:
    raw = json.loads(Path(path).read_text())
    entity = from_jsonable(raw, SkillFile)
    return entity
