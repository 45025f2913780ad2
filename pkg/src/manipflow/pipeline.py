"""Five-step pipeline orchestration wired through memory.

Every stage's inputs and outputs are committed so a full run leaves an
audit trail: the scene and hypotheses, parameterized actions, validation
reports, the scored selection and the executed episode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .config import PipelineConfig
from .discovery import (DiscoveryRequest, GraspDatabase, discover)
from .execution import WorldState, execute_action, initial_world
from .idf import (ActionHypothesis, ActionType, ExecutableAction,
                  ExecutedAction, SE2)
from .memory import Memory, Segment, Skill, SkillFile
from .placement import PlacementError, parameterize
from .robot import RobotDescription
from .scene import Scene
from .validation import NoValidAction, ValidationReport, select_best, validate


@dataclass
class PipelineRun:
    """Outcome of one discover-to-execute tick."""

    hypotheses: List[ActionHypothesis]
    actions: List[ExecutableAction]
    reports: List[ValidationReport]
    selected: Optional[ExecutableAction]
    episode: Optional[ExecutedAction]


class Pipeline:
    """Holds the live world state and runs pipeline ticks against memory."""

    def __init__(self, robot: RobotDescription, memory: Memory,
                 grasp_db: GraspDatabase = GraspDatabase(),
                 config: PipelineConfig = PipelineConfig(),
                 world: Optional[WorldState] = None):
        self.robot = robot
        self.memory = memory
        self.grasp_db = grasp_db
        self.config = config
        self.world = world if world is not None else initial_world(Scene(), robot)

    # -- memory plumbing ----------------------------------------------------

    def procedural_skills(self) -> List[Skill]:
        rows = self.memory.query(Segment.Procedural, entity_type=SkillFile)
        return [sf.skill for sf, _ in rows]

    def commit_scene(self) -> None:
        self.memory.commit(Segment.Working, self.world.scene, entity_id="scene")

    def _commit_all(self, segment: Segment, entities: Sequence) -> None:
        for entity in entities:
            self.memory.commit(segment, entity)

    # -- steps ---------------------------------------------------------------

    def run_discovery(self, request: DiscoveryRequest) -> List[ActionHypothesis]:
        hypotheses = discover(request, self.grasp_db, self.config.discovery)
        self._commit_all(Segment.Working, hypotheses)
        return hypotheses

    def run_parameterization(self, hypotheses: Sequence[ActionHypothesis]
                             ) -> Tuple[List[ExecutableAction],
                                        Optional[PlacementError]]:
        actions: List[ExecutableAction] = []
        last_error: Optional[PlacementError] = None
        skills = self.procedural_skills()
        for hypothesis in hypotheses:
            try:
                actions.extend(parameterize(
                    hypothesis, self.robot, self.world.scene, self.config,
                    skills=skills, current_base=self.world.robot_base,
                    attachments=self.world.attachments))
            except PlacementError as exc:
                last_error = exc
        self._commit_all(Segment.Working, actions)
        return actions, last_error

    def run_validation(self, actions: Sequence[ExecutableAction],
                       hypotheses: Sequence[ActionHypothesis]
                       ) -> List[ValidationReport]:
        hyp_map = {h.id: h for h in hypotheses}
        reports = [validate(a, self.world.scene, self.robot, self.config,
                            hypotheses=hyp_map) for a in actions]
        self._commit_all(Segment.Working, reports)
        return reports

    def run_selection(self, actions: Sequence[ExecutableAction],
                      reports: Sequence[ValidationReport]) -> ExecutableAction:
        best = select_best(actions, reports, self.robot, self.world.scene,
                           self.config.selection,
                           current_base=self.world.robot_base)
        self.memory.commit(Segment.Working, best)  # scored revision
        return best

    def run_execution(self, action: ExecutableAction) -> ExecutedAction:
        episode, self.world = execute_action(action, self.world, self.robot,
                                             self.config)
        self.memory.commit(Segment.Episodic, episode)
        self.commit_scene()
        return episode

    # -- full tick -------------------------------------------------------------

    def tick(self, request: DiscoveryRequest,
             hypothesis_filter=None) -> PipelineRun:
        """Discover, parameterize, validate, select and execute one action."""
        self.commit_scene()
        hypotheses = self.run_discovery(request)
        if hypothesis_filter is not None:
            hypotheses = [h for h in hypotheses if hypothesis_filter(h)]
        actions, error = self.run_parameterization(hypotheses)
        if not actions:
            if error is not None:
                raise error
            raise NoValidAction(())
        reports = self.run_validation(actions, hypotheses)
        selected = self.run_selection(actions, reports)
        episode = self.run_execution(selected)
        return PipelineRun(hypotheses=list(hypotheses), actions=actions,
                           reports=reports, selected=selected, episode=episode)

    def tick_actions(self, hypotheses: Sequence[ActionHypothesis],
                     actions: Sequence[ExecutableAction]) -> PipelineRun:
        """Validate, select and execute pre-built actions (operator flows)."""
        self.commit_scene()
        self._commit_all(Segment.Working, hypotheses)
        self._commit_all(Segment.Working, actions)
        reports = self.run_validation(actions, hypotheses)
        selected = self.run_selection(actions, reports)
        episode = self.run_execution(selected)
        return PipelineRun(hypotheses=list(hypotheses), actions=list(actions),
                           reports=reports, selected=selected, episode=episode)
