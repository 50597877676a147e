"""
Dataset assembly: turn an archive and a task group into feature tables or
sequence tables ready for preprocessing.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.config.settings import get_settings
from app.core.data.types import (
    FeatureTable,
    MetricArchive,
    SequenceTable,
    TaskRecord,
    WindowMode,
    WindowSpec,
)
from app.core.data.windowing import slice_window, task_sequences
from app.core.errors import DataIntegrityError, InsufficientDataError, InvalidInputError
from app.core.features.catalog import DEFAULT_CATALOG, FeatureCatalog
from app.core.features.extraction import MetricFeatureBlock, extract_block

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RemainingTargets:
    """
    Mid-execution targets of a task group.

    Attributes:
        estimates: task_id -> RTT estimate used to place the midpoint
        targets: task_id -> t_end - (t_start + 0.5 * estimate), ms
        dropped: tasks without an estimate and without earlier history
    """

    estimates: Dict[str, float]
    targets: Dict[str, float]
    dropped: Tuple[str, ...]


def remaining_targets(
    tasks: Sequence[TaskRecord], rtt_estimates: Optional[Mapping[str, float]] = None
) -> RemainingTargets:
    """
    Remaining-RTT targets for tasks checked halfway through their estimate.

    The estimate is the supplied one, else the mean RTT of the tasks of the
    same (app, node) that completed by the task's t_start.
    """
    supplied = rtt_estimates or {}
    groups: Dict[Tuple[str, str], List[TaskRecord]] = {}
    for task in tasks:
        groups.setdefault((task.app_id, task.node_id), []).append(task)

    estimates: Dict[str, float] = {}
    dropped: List[str] = []
    for group in groups.values():
        finished = sorted(group, key=lambda t: (t.t_end, t.task_id))
        ends = np.array([t.t_end for t in finished], dtype=np.int64)
        cumulative = np.concatenate([[0.0], np.cumsum([t.rtt for t in finished], dtype=np.float64)])
        for task in sorted(group, key=lambda t: (t.t_start, t.task_id)):
            if task.task_id in supplied:
                estimates[task.task_id] = float(supplied[task.task_id])
                continue
            earlier = int(np.searchsorted(ends, task.t_start, side="right"))
            if earlier == 0:
                dropped.append(task.task_id)
                continue
            estimates[task.task_id] = float(cumulative[earlier] / earlier)

    targets = {
        t.task_id: float(t.t_end - (t.t_start + 0.5 * estimates[t.task_id]))
        for t in tasks
        if t.task_id in estimates
    }
    if dropped:
        logger.debug("%d tasks have no RTT history for a midpoint estimate", len(dropped))
    return RemainingTargets(estimates=estimates, targets=targets, dropped=tuple(dropped))


def _single_node(tasks: Sequence[TaskRecord]) -> str:
    nodes = {t.node_id for t in tasks}
    if len(nodes) != 1:
        raise InvalidInputError(f"a task group must run on exactly one node, got {sorted(nodes)}")
    return nodes.pop()


def usable_tasks(
    archive: MetricArchive,
    tasks: Sequence[TaskRecord],
    spec: WindowSpec,
    metrics: Sequence[str],
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> List[TaskRecord]:
    """Tasks whose window holds at least one sample of every metric."""
    estimates = rtt_estimates or {}
    if spec.mode is WindowMode.MID_EXECUTION:
        tasks = [t for t in tasks if t.task_id in estimates]
    if not tasks:
        return []
    node = _single_node(tasks)
    kept = []
    for task in tasks:
        est = estimates.get(task.task_id)
        if all(not slice_window(archive.get(node, m), task, spec, est).is_empty for m in metrics):
            kept.append(task)
    if len(kept) < len(tasks):
        logger.warning(
            "Dropped %d of %d tasks on %s with an empty %s window",
            len(tasks) - len(kept),
            len(tasks),
            node,
            spec.mode.value,
        )
    return kept


def assemble_blocks(
    archive: MetricArchive,
    tasks: Sequence[TaskRecord],
    spec: WindowSpec,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    metrics: Optional[Sequence[str]] = None,
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> Tuple[List[MetricFeatureBlock], List[TaskRecord]]:
    """
    Per-metric feature blocks over the tasks with complete windows.

    Metrics are extracted concurrently and returned in sorted name order.
    """
    if not tasks:
        raise InsufficientDataError("no tasks to assemble")
    node = _single_node(tasks)
    names = sorted(metrics) if metrics is not None else archive.metrics_for_node(node)
    if not names:
        raise InsufficientDataError(f"no metrics available on node {node!r}")

    kept = usable_tasks(archive, tasks, spec, names, rtt_estimates)
    if not kept:
        raise InsufficientDataError(f"every task on {node!r} has an empty window")

    with ThreadPoolExecutor(max_workers=get_settings().THREADS) as pool:
        blocks = list(
            pool.map(
                lambda m: extract_block(archive, kept, spec, m, catalog, rtt_estimates),
                names,
            )
        )
    return blocks, kept


def table_from_blocks(
    blocks: Sequence[MetricFeatureBlock],
    tasks: Sequence[TaskRecord],
    targets: Optional[Mapping[str, float]] = None,
) -> FeatureTable:
    """Concatenate blocks column-wise into a FeatureTable with RTT (or given) targets."""
    if not blocks:
        raise InsufficientDataError("no feature blocks to combine")
    y = np.array(
        [targets[t.task_id] if targets is not None else t.rtt for t in tasks], dtype=np.float64
    )
    return FeatureTable(
        X=np.hstack([b.values for b in blocks]),
        columns=tuple(c for b in blocks for c in b.columns),
        y=y,
        provenance={b.metric_name: b.columns for b in blocks},
        task_ids=tuple(t.task_id for t in tasks),
        stages=np.array([-1 if t.stage is None else t.stage for t in tasks], dtype=np.int64),
        t_starts=np.array([t.t_start for t in tasks], dtype=np.int64),
    )


def assemble_feature_table(
    archive: MetricArchive,
    tasks: Sequence[TaskRecord],
    spec: WindowSpec,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    metrics: Optional[Sequence[str]] = None,
    rtt_estimates: Optional[Mapping[str, float]] = None,
    targets: Optional[Mapping[str, float]] = None,
) -> FeatureTable:
    """
    S x K feature table of one task group.

    Args:
        archive: Monitoring data
        tasks: Tasks of one (app, node)
        spec: Window length and mode
        catalog: Feature catalog
        metrics: Metrics to use (default: all metrics of the node)
        rtt_estimates: Per-task RTT estimates for mid-execution windows
        targets: Per-task targets overriding the RTT

    Returns:
        FeatureTable; tasks with an empty window are dropped with a warning

    Raises:
        DataIntegrityError: every kept task has the same target
        InsufficientDataError: no task has a usable window
    """
    blocks, kept = assemble_blocks(archive, tasks, spec, catalog, metrics, rtt_estimates)
    table = table_from_blocks(blocks, kept, targets)
    if np.ptp(table.y) == 0:
        raise DataIntegrityError(
            f"target is constant ({table.y[0]:g}) over all {len(table.y)} tasks on {kept[0].node_id!r}"
        )
    return table


def assemble_sequences(
    archive: MetricArchive,
    tasks: Sequence[TaskRecord],
    spec: WindowSpec,
    metrics: Sequence[str],
    targets: Optional[Mapping[str, float]] = None,
) -> SequenceTable:
    """
    S x T x M raw sequence table for sequential models.

    Only pre-submission windows give every task the same length T.
    """
    if spec.mode is not WindowMode.PRE_SUBMISSION:
        raise InvalidInputError("sequence tables need pre_submission windows")
    if not metrics:
        raise InvalidInputError("at least one metric is required")
    if not tasks:
        raise InsufficientDataError("no tasks to assemble")
    node = _single_node(tasks)
    kept = usable_tasks(archive, tasks, spec, metrics)
    if not kept:
        raise InsufficientDataError(f"every task on {node!r} has an empty window")

    channels = [task_sequences(archive.get(node, m), kept, spec) for m in metrics]
    X = np.stack([np.vstack(seqs) for seqs in channels], axis=2)
    y = np.array(
        [targets[t.task_id] if targets is not None else t.rtt for t in kept], dtype=np.float64
    )
    return SequenceTable(
        X=X,
        metrics=tuple(metrics),
        y=y,
        task_ids=tuple(t.task_id for t in kept),
        stages=np.array([-1 if t.stage is None else t.stage for t in kept], dtype=np.int64),
        t_starts=np.array([t.t_start for t in kept], dtype=np.int64),
    )
