"""
Workload-stage controller of one simulated node.
"""

import logging
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

from app.core.data.types import StageBoundary
from app.core.simulation.confirm import confirm_needed
from app.schemas.scenario import ConfirmParams, Scenario

logger = logging.getLogger(__name__)


class StageController:
    """
    Decides when a node moves to its next workload stage.

    A stage with a fixed task count ends when every active application has
    completed that many tasks. Otherwise the criterion is checked at every
    check interval and the stage ends once it holds for every active
    application. Reaching the task cap forces the advance.
    """

    def __init__(
        self,
        node_id: str,
        scenario: Scenario,
        confirm: Optional[ConfirmParams] = None,
    ) -> None:
        self.node_id = node_id
        self._stages = scenario.stages
        self._placed = set(scenario.apps_on(node_id))
        self._confirm = confirm or scenario.confirm
        self._cap = scenario.max_tasks_per_stage
        self._seed = scenario.seed

        self.stage = -1
        self._stage_start = 0
        self._rtts: Dict[str, List[int]] = defaultdict(list)
        self.boundaries: List[StageBoundary] = []

    @property
    def finished(self) -> bool:
        return self.stage >= len(self._stages)

    @property
    def law_scale(self) -> float:
        return self._stages[self.stage].law_scale

    def active_apps(self) -> List[str]:
        """Sorted applications active on this node in the current stage."""
        if self.stage < 0 or self.finished:
            return []
        return sorted(self._placed.intersection(self._stages[self.stage].active))

    def begin(self, t_ms: int) -> None:
        self.stage = 0
        self._stage_start = t_ms
        self._rtts.clear()

    def record(self, app_id: str, stage: int, rtt_ms: int) -> None:
        """Count a completed task toward the stage it was submitted in."""
        if stage == self.stage:
            self._rtts[app_id].append(rtt_ms)

    def cap_reached(self) -> bool:
        return any(len(self._rtts[app]) >= self._cap for app in self.active_apps())

    def after_completion(self) -> Tuple[bool, bool]:
        """
        Returns:
            (advance, forced) after a task completion
        """
        if self.finished or self.stage < 0:
            return False, False
        if self.cap_reached():
            return True, True
        target = self._stages[self.stage].tasks
        active = self.active_apps()
        if target is not None and active:
            return all(len(self._rtts[app]) >= target for app in active), False
        return False, False

    def at_check(self) -> bool:
        """Whether the stage ends at a periodic check."""
        if self.finished or self.stage < 0:
            return False
        active = self.active_apps()
        if not active:
            return True
        if self._stages[self.stage].tasks is not None:
            return False
        return all(
            confirm_needed(self._rtts[app], self._confirm, seed=self._seed).satisfied
            for app in active
        )

    def advance(self, t_ms: int, forced: bool = False) -> None:
        """Close the current stage at ``t_ms`` and open the next one."""
        if forced:
            logger.warning(
                "Node %s: stage %d reached the %d-task cap, forcing advance",
                self.node_id,
                self.stage,
                self._cap,
            )
        self.boundaries.append(
            StageBoundary(
                node_id=self.node_id,
                stage_id=self.stage,
                start_ms=self._stage_start,
                end_ms=t_ms,
                forced=forced,
            )
        )
        logger.debug(
            "Node %s: stage %d ended at %d ms after %s tasks",
            self.node_id,
            self.stage,
            t_ms,
            {app: len(rtts) for app, rtts in sorted(self._rtts.items())},
        )
        self.stage += 1
        self._stage_start = t_ms
        self._rtts.clear()

