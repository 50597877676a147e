"""
Discrete-event simulator of co-located applications on edge nodes.

Every node runs its own event loop on a simulated millisecond clock with its
own seeded random streams, so nodes are independent and a scenario run is
fully determined by its seed.
"""

import heapq
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.core.data.types import (
    MetricArchive,
    Segment,
    StageBoundary,
    TaskLog,
    TaskRecord,
    WindowMode,
    WindowSpec,
)
from app.core.data.windowing import resample_to_grid
from app.core.simulation.law import RttLaw, export_law, utilization
from app.core.simulation.stages import StageController
from app.schemas.records import MetricLine
from app.schemas.scenario import ConfirmParams, Scenario

logger = logging.getLogger(__name__)

# same-time ordering: completions free resources before anything else is observed
_COMPLETE, _BACKGROUND, _START, _SUBMIT, _MIDPOINT, _CHECK, _TICK = range(7)

CPU_RESOURCE = "cpu"


def resource_metric(resource: str) -> str:
    return f"node_{resource}_utilization"


def decoy_metric(index: int) -> str:
    return f"node_decoy_{index:02d}"


def constant_metric(index: int) -> str:
    return f"node_const_{index:02d}"


@dataclass
class SimulationResult:
    """
    Output of one scenario run.

    Attributes:
        archive: Aggregated metric archive (per-core series already averaged)
        log: Task log with stage annotations
        ground_truth: One row per task with the law's components
        law: Exported generative parameters
        records: Raw metric lines, including per-core sub-series
    """

    archive: MetricArchive
    log: TaskLog
    ground_truth: pd.DataFrame
    law: Dict[str, Any]
    records: List[MetricLine] = field(default_factory=list)


class _NodeSimulation:
    """Event loop of one node."""

    def __init__(
        self,
        scenario: Scenario,
        node_id: str,
        seed_seq: np.random.SeedSequence,
        confirm: Optional[ConfirmParams],
    ) -> None:
        self.scenario = scenario
        self.node = scenario.node(node_id)
        self.resources = sorted(self.node.capacities)
        self.apps = scenario.apps_on(node_id)
        self.laws = {a: RttLaw.for_placement(scenario.app(a), self.node) for a in self.apps}
        self.controller = StageController(node_id, scenario, confirm)

        think, noise, background, metrics = seed_seq.spawn(4)
        self._think_rng = np.random.default_rng(think)
        self._noise_rng = np.random.default_rng(noise)
        self._background_rng = np.random.default_rng(background)
        self._metric_rng = np.random.default_rng(metrics)

        self.period = scenario.scrape_interval_ms
        self.window = WindowSpec(scenario.lookback_s, WindowMode.PRE_SUBMISSION, self.period)

        self._queue: List[Tuple[int, int, int, Any]] = []
        self._seq = itertools.count()
        self._pending: Dict[str, Optional[int]] = {a: None for a in self.apps}
        self._in_flight: Dict[str, Optional[dict]] = {a: None for a in self.apps}
        self._task_counter: Dict[str, int] = defaultdict(int)
        self._background = {r: 0.0 for r in self.resources}
        self._decoys = np.zeros(scenario.decoy_metrics)

        self._tick_ts: List[int] = []
        self._util_history: Dict[str, List[float]] = {r: [] for r in self.resources}
        self._emitted: Dict[Tuple[str, Optional[str]], List[float]] = defaultdict(list)

        self.tasks: List[TaskRecord] = []
        self.truth: List[dict] = []

    # -- event queue ---------------------------------------------------------

    def _push(self, t_ms: int, kind: int, payload: Any = None) -> int:
        token = next(self._seq)
        heapq.heappush(self._queue, (t_ms, kind, token, payload))
        return token

    def run(self) -> None:
        warmup_ms = int(round(self.scenario.effective_warmup_s * 1000))
        self._push(0, _TICK)
        if self.node.background:
            self._push(0, _BACKGROUND)
        self._push(warmup_ms, _START)

        handlers = {
            _COMPLETE: self._on_complete,
            _BACKGROUND: self._on_background,
            _START: self._on_start,
            _SUBMIT: self._on_submit,
            _MIDPOINT: self._on_midpoint,
            _CHECK: self._on_check,
            _TICK: self._on_tick,
        }
        while self._queue:
            t_ms, kind, token, payload = heapq.heappop(self._queue)
            handlers[kind](t_ms, token, payload)

    @property
    def _idle(self) -> bool:
        return self.controller.finished and not any(self._in_flight.values())

    # -- utilization ---------------------------------------------------------

    def _current_utilization(self) -> Dict[str, float]:
        demand: Dict[str, float] = defaultdict(float)
        for app_id, task in self._in_flight.items():
            if task is not None:
                for resource, units in self.scenario.app(app_id).demand.items():
                    demand[resource] += units
        return utilization(self.node, self._background, demand)

    def _window_utilization(self, start: int, end: int, inclusive: bool) -> Optional[Dict[str, float]]:
        """Mean noise-free utilization between start and end on the pipeline's grid; None without ticks."""
        ts = np.asarray(self._tick_ts, dtype=np.int64)
        lo = int(np.searchsorted(ts, start, side="left"))
        hi = int(np.searchsorted(ts, end, side="right" if inclusive else "left"))
        if hi <= lo:
            return None
        out = {}
        for resource in self.resources:
            segment = Segment(
                timestamps=ts[lo:hi],
                values=np.asarray(self._util_history[resource][lo:hi], dtype=np.float64),
                start_ms=start,
                end_ms=end,
                end_inclusive=inclusive,
            )
            out[resource] = float(np.mean(resample_to_grid(segment, self.period)))
        return out

    def _lookback_utilization(self, t_start: int) -> Dict[str, float]:
        """Mean noise-free utilization over the pre-submission window."""
        out = self._window_utilization(*self.window.bounds(t_start))
        return out if out is not None else {r: 0.0 for r in self.resources}

    def _execution_utilization(self, t_start: int, t_mid: int) -> Dict[str, float]:
        """Mean utilization between submission and midpoint, the current level if no tick fell inside."""
        out = self._window_utilization(t_start, t_mid, False)
        return out if out is not None else self._current_utilization()

    # -- handlers ------------------------------------------------------------

    def _schedule_submit(self, app_id: str, t_ms: int) -> None:
        wait = self._think_rng.uniform(0.0, self.scenario.app(app_id).t_max_s * 1000.0)
        self._pending[app_id] = self._push(t_ms + int(round(wait)), _SUBMIT, app_id)

    def _open_stage(self, t_ms: int) -> None:
        active = self.controller.active_apps()
        for app_id in self.apps:
            if app_id not in active:
                self._pending[app_id] = None
            elif self._pending[app_id] is None and self._in_flight[app_id] is None:
                self._schedule_submit(app_id, t_ms)
        if not self.controller.finished:
            check_ms = int(round(self.scenario.check_interval_s * 1000))
            self._push(t_ms + check_ms, _CHECK, self.controller.stage)

    def _advance(self, t_ms: int, forced: bool) -> None:
        self.controller.advance(t_ms, forced)
        self._open_stage(t_ms)

    def _on_start(self, t_ms: int, token: int, payload: Any) -> None:
        self.controller.begin(t_ms)
        self._open_stage(t_ms)

    def _on_submit(self, t_ms: int, token: int, app_id: str) -> None:
        if self._pending[app_id] != token:
            return
        self._pending[app_id] = None

        law = self.laws[app_id]
        stage = self.controller.stage
        lookback = self._lookback_utilization(t_ms)
        inflation = law.inflation(lookback, self.controller.law_scale)
        noise = law.noise_factor(float(self._noise_rng.standard_normal()))
        rtt = law.rtt_ms(inflation, noise)

        k = self._task_counter[app_id]
        self._task_counter[app_id] += 1
        truth = {
            "task_id": f"{self.node.node_id}-{app_id}-{k:06d}",
            "app": app_id,
            "node": self.node.node_id,
            "stage": stage,
            "t_start": t_ms,
            "t_end": t_ms + rtt,
            "base_ms": law.base_ms / law.speed,
            "law_scale": self.controller.law_scale,
            "inflation": inflation,
            "execution_inflation": float("nan"),
        }
        truth.update({f"util_{r}": lookback[r] for r in self.resources})
        truth.update({"noise_factor": noise, "planned_rtt_ms": rtt, "rtt_ms": rtt})

        self._in_flight[app_id] = {"task": None, "truth": truth}
        if law.reacts_during_execution:
            self._push(t_ms + law.first_half_ms(rtt), _MIDPOINT, app_id)
        else:
            self._finish_planning(app_id)

    def _on_midpoint(self, t_ms: int, token: int, app_id: str) -> None:
        law = self.laws[app_id]
        truth = self._in_flight[app_id]["truth"]
        planned = truth["planned_rtt_ms"]
        execution = law.inflation(
            self._execution_utilization(truth["t_start"], t_ms),
            truth["law_scale"],
        )
        remaining = law.remaining_ms(planned, truth["inflation"], execution)
        truth.update(
            {
                "execution_inflation": execution,
                "t_end": t_ms + remaining,
                "rtt_ms": t_ms + remaining - truth["t_start"],
            }
        )
        self._finish_planning(app_id)

    def _finish_planning(self, app_id: str) -> None:
        """Create the task record once its end time is known and schedule the completion."""
        done = self._in_flight[app_id]
        truth = done["truth"]
        done["task"] = TaskRecord(
            task_id=truth["task_id"],
            app_id=app_id,
            node_id=self.node.node_id,
            t_start=truth["t_start"],
            t_end=truth["t_end"],
            stage=truth["stage"],
        )
        self._push(truth["t_end"], _COMPLETE, app_id)

    def _on_complete(self, t_ms: int, token: int, app_id: str) -> None:
        done = self._in_flight[app_id]
        self._in_flight[app_id] = None
        self.tasks.append(done["task"])
        self.truth.append(done["truth"])

        task = done["task"]
        self.controller.record(app_id, task.stage, task.rtt)
        advance, forced = self.controller.after_completion()
        if advance:
            self._advance(t_ms, forced)
        elif app_id in self.controller.active_apps() and self._pending[app_id] is None:
            self._schedule_submit(app_id, t_ms)

    def _on_check(self, t_ms: int, token: int, stage: int) -> None:
        if stage != self.controller.stage:
            return
        if self.controller.at_check():
            self._advance(t_ms, forced=False)
        else:
            check_ms = int(round(self.scenario.check_interval_s * 1000))
            self._push(t_ms + check_ms, _CHECK, stage)

    def _on_background(self, t_ms: int, token: int, payload: Any) -> None:
        for resource in sorted(self.node.background):
            levels = self.node.background[resource]
            self._background[resource] = float(levels[int(self._background_rng.integers(len(levels)))])
        if not self.controller.finished:
            period_ms = int(round(self.node.background_period_s * 1000))
            self._push(t_ms + period_ms, _BACKGROUND)

    def _on_tick(self, t_ms: int, token: int, payload: Any) -> None:
        util = self._current_utilization()
        self._tick_ts.append(t_ms)
        sigma = self.node.noise_sigma

        for resource in self.resources:
            self._util_history[resource].append(util[resource])
            name = resource_metric(resource)
            if resource == CPU_RESOURCE and self.node.cores > 1:
                noise = self._metric_rng.normal(0.0, sigma, self.node.cores) if sigma > 0 else np.zeros(self.node.cores)
                for core in range(self.node.cores):
                    self._emitted[(name, f"core{core}")].append(util[resource] + float(noise[core]))
            else:
                noise = float(self._metric_rng.normal(0.0, sigma)) if sigma > 0 else 0.0
                self._emitted[(name, None)].append(util[resource] + noise)

        phi = self.scenario.decoy_phi
        if len(self._decoys):
            shocks = self._metric_rng.standard_normal(len(self._decoys))
            self._decoys = phi * self._decoys + np.sqrt(1.0 - phi**2) * shocks
            for i, value in enumerate(self._decoys):
                self._emitted[(decoy_metric(i), None)].append(float(value))
        for i in range(self.scenario.constant_metrics):
            self._emitted[(constant_metric(i), None)].append(float(i))

        if not self._idle:
            self._push(t_ms + self.period, _TICK)

    # -- output --------------------------------------------------------------

    def metric_lines(self) -> List[MetricLine]:
        return [
            MetricLine(
                metric=metric,
                node=self.node.node_id,
                instance=instance,
                ts_ms=list(self._tick_ts),
                values=values,
            )
            for (metric, instance), values in sorted(self._emitted.items(), key=lambda kv: (kv[0][0], kv[0][1] or ""))
        ]


def run_scenario(scenario: Scenario, confirm: Optional[ConfirmParams] = None) -> SimulationResult:
    """
    Simulate a scenario.

    Nodes are simulated independently, each with a seed spawned from the
    scenario seed in sorted node order.

    Args:
        scenario: Validated scenario
        confirm: Criterion overriding ``scenario.confirm``

    Returns:
        SimulationResult with archive, staged task log, ground truth and law
    """
    node_ids = sorted(n.node_id for n in scenario.nodes)
    seeds = np.random.SeedSequence(scenario.seed).spawn(len(node_ids))

    records: List[MetricLine] = []
    tasks: List[TaskRecord] = []
    stages: List[StageBoundary] = []
    truth: List[dict] = []
    for node_id, seed_seq in zip(node_ids, seeds):
        sim = _NodeSimulation(scenario, node_id, seed_seq, confirm)
        sim.run()
        records.extend(sim.metric_lines())
        tasks.extend(sim.tasks)
        stages.extend(sim.controller.boundaries)
        truth.extend(sim.truth)
        logger.info(
            "Simulated node %s: %d tasks over %d stages",
            node_id,
            len(sim.tasks),
            len(sim.controller.boundaries),
        )

    archive = MetricArchive.from_records(records, scrape_interval_ms=scenario.scrape_interval_ms)
    log = TaskLog(records=tuple(tasks), stages=tuple(stages))
    ground_truth = pd.DataFrame(truth)
    if not ground_truth.empty:
        ground_truth = ground_truth.sort_values(["node", "app", "t_start", "task_id"], kind="mergesort")
        ground_truth = ground_truth.reset_index(drop=True)

    return SimulationResult(
        archive=archive,
        log=log,
        ground_truth=ground_truth,
        law=export_law(scenario),
        records=records,
    )


def stage_controller(scenario: Scenario, confirm: Optional[ConfirmParams] = None) -> Sequence[StageBoundary]:
    """
    Stage boundaries chosen by the per-node controllers for a scenario.

    Returns:
        Boundaries sorted by (node, stage)
    """
    return run_scenario(scenario, confirm=confirm).log.stages
