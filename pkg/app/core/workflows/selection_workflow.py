"""
Selection sweep.

Orchestrates the per-window pipeline (stable-metric removal, feature
assembly, outlier removal, split, metric selection on the training rows)
and trains every (family, d, t_offset) candidate, then applies the
latency-constrained selection.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.correlation.perf_correlate import perf_correlate, top_d_columns
from app.core.data.assembly import assemble_feature_table, assemble_sequences, remaining_targets
from app.core.data.preprocessing import normalize_minmax, remove_outliers, split_indices
from app.core.data.stability import drop_stable_metrics
from app.core.data.types import (
    Dataset,
    FeatureTable,
    MetricArchive,
    SplitIndices,
    TaskLog,
    TaskRecord,
    WindowMode,
    WindowSpec,
)
from app.core.errors import InsufficientDataError, PerfOracleError
from app.core.features.catalog import DEFAULT_CATALOG, FeatureCatalog
from app.core.models.base import ModelFamily, TrainedModel
from app.core.models.benchmark import measure_inference
from app.core.models.search import SearchBudget, hyper_search
from app.core.models.training import baseline_mean, score
from app.core.services.selection_service import select
from app.schemas.reports import CandidateResult, CandidateStatus, CorrelationReport, SelectionResult
from app.schemas.requests import SweepConfig

logger = logging.getLogger(__name__)


@dataclass
class WindowData:
    """Everything the candidates of one t_offset share."""

    spec: WindowSpec
    table: FeatureTable
    indices: SplitIndices
    report: CorrelationReport
    tasks: Dict[str, TaskRecord]
    targets: Optional[Dict[str, float]]
    outliers: int = 0


@dataclass
class SweepOutcome:
    """
    Candidate table of one (app, node) plus the trained models.

    Attributes:
        candidates: One row per candidate, failures included
        models: candidate_id -> trained model (successful candidates only)
        reports: t_offset -> correlation report of that window
        mu_rtt_ms: Mean RTT of the training partition of the shortest window
    """

    app_id: str
    node_id: str
    mode: WindowMode
    candidates: List[CandidateResult] = field(default_factory=list)
    models: Dict[str, TrainedModel] = field(default_factory=dict)
    reports: Dict[float, CorrelationReport] = field(default_factory=dict)
    mu_rtt_ms: float = float("nan")


def candidate_id(family: ModelFamily, d: int, t_offset: float) -> str:
    return f"{family.value}-d{d}-t{t_offset:g}"


def _task_windows(spec: WindowSpec, tasks: Sequence[TaskRecord], estimates: Mapping[str, float]):
    out = []
    for task in tasks:
        if spec.mode is WindowMode.MID_EXECUTION and task.task_id not in estimates:
            continue
        start, end, inclusive = spec.bounds(task.t_start, task.t_end, estimates.get(task.task_id))
        out.append((task.node_id, start, end if inclusive else end - 1))
    return out


def prepare_window(
    archive: MetricArchive,
    tasks: Sequence[TaskRecord],
    t_offset: float,
    config: SweepConfig,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> WindowData:
    """
    Build the shared data of one window.

    Metric selection sees the training rows only.

    Raises:
        DataError: too few usable tasks, rows or metrics
    """
    spec = WindowSpec(t_offset, config.mode, archive.scrape_interval_ms)
    estimates: Dict[str, float] = {}
    targets = None
    if config.mode is WindowMode.MID_EXECUTION:
        remaining = remaining_targets(tasks, rtt_estimates)
        estimates, targets = remaining.estimates, remaining.targets

    archive = drop_stable_metrics(archive, _task_windows(spec, tasks, estimates))
    node = tasks[0].node_id
    if not archive.metrics_for_node(node):
        raise InsufficientDataError(f"every metric on {node!r} is stable over the task windows")

    table = assemble_feature_table(
        archive, tasks, spec, catalog, rtt_estimates=estimates or None, targets=targets
    )
    table, outliers = remove_outliers(table)
    indices = split_indices(table.n_rows, config.fractions, config.seed)
    _, report = perf_correlate(table.take(indices.train), config.theta)
    table = table.select_columns(c for cols in report.surviving_columns.values() for c in cols)

    logger.debug(
        "Window %gs: %d rows (%d outliers), %d metrics ranked",
        t_offset,
        table.n_rows,
        outliers,
        len(report.ranked),
    )
    return WindowData(
        spec=spec,
        table=table,
        indices=indices,
        report=report,
        tasks={t.task_id: t for t in tasks},
        targets=targets,
        outliers=outliers,
    )


def _dataset(window: WindowData, archive: MetricArchive, family: ModelFamily, d: int) -> Dataset:
    if d == 0:
        table = window.table
    elif family.is_sequential:
        metrics = window.report.metric_names[:d]
        rows = [window.tasks[i] for i in window.table.task_ids]
        targets = dict(zip(window.table.task_ids, window.table.y.tolist()))
        table = assemble_sequences(archive, rows, window.spec, metrics, targets)
        if table.n_rows != window.table.n_rows:
            raise InsufficientDataError("sequence rows do not match the feature rows")
    else:
        table = top_d_columns(window.report, window.table, d)
    dataset, _ = normalize_minmax(Dataset.from_indices(table, window.indices))
    return dataset


def _evaluate(
    window: WindowData,
    archive: MetricArchive,
    family: ModelFamily,
    d: int,
    config: SweepConfig,
    base: CandidateResult,
) -> Tuple[CandidateResult, Optional[TrainedModel]]:
    dataset = _dataset(window, archive, family, d)
    if family is ModelFamily.MEAN:
        model = baseline_mean(dataset)
    else:
        budget = SearchBudget(max_candidates=config.max_trials, seed=config.seed)
        model = hyper_search(family, dataset, budget).model

    test_rmse = score(model, dataset.test.X, dataset.test.y)
    inference = measure_inference(model, repetitions=config.repetitions, warmup=config.warmup)
    return (
        base.model_copy(
            update={
                "hyperparameters": dict(model.spec.hyperparameters),
                "column_count": 0 if family is ModelFamily.MEAN else len(dataset.columns),
                "validation_rmse": model.metadata.validation_rmse,
                "test_rmse": test_rmse,
                "test_rmse_ms": test_rmse * dataset.params.target_range,
                "inference": inference,
                "train_time_ms": model.metadata.train_time_ms,
            }
        ),
        model,
    )


def _plan(config: SweepConfig, available: int, t_offset: float) -> List[Tuple[ModelFamily, int, Optional[str]]]:
    """(family, d, skip reason) for every candidate of one window."""
    plan: List[Tuple[ModelFamily, int, Optional[str]]] = []
    if config.include_baseline:
        plan.append((ModelFamily.MEAN, 0, None))
    counts = config.feature_counts_for(available)
    for family in config.families:
        if family.is_sequential and t_offset not in config.windows_for(family):
            reason = f"sequential families run on windows {config.sequential_windows_s} only"
            plan.extend((family, d, reason) for d in counts)
            continue
        if family.is_sequential and config.mode is not WindowMode.PRE_SUBMISSION:
            plan.extend((family, d, "sequential families need pre_submission windows") for d in counts)
            continue
        for d in counts:
            reason = None if d <= available else f"d={d} exceeds the {available} ranked metrics"
            plan.append((family, d, reason))
    return plan


def sweep(
    app_id: str,
    node_id: str,
    archive: MetricArchive,
    log: TaskLog,
    config: Optional[SweepConfig] = None,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> SweepOutcome:
    """
    Train and score every (family, d, t_offset) candidate of one (app, node).

    Errors of one window or one candidate are recorded on the affected
    candidates; the sweep itself only fails on an unknown (app, node).

    Raises:
        UnknownKeyError: no tasks for the pair or unknown node
    """
    config = config or SweepConfig()
    tasks = log.group(app_id, node_id)
    node_archive = archive.for_node(node_id)
    outcome = SweepOutcome(app_id=app_id, node_id=node_id, mode=config.mode)

    for t_offset in config.windows_s:
        try:
            window = prepare_window(node_archive, tasks, t_offset, config, catalog, rtt_estimates)
        except PerfOracleError as exc:
            logger.warning("Window %gs of %s on %s failed: %s", t_offset, app_id, node_id, exc)
            for family in ([ModelFamily.MEAN] if config.include_baseline else []) + list(config.families):
                outcome.candidates.append(
                    CandidateResult(
                        candidate_id=candidate_id(family, 0, t_offset),
                        app_id=app_id,
                        node_id=node_id,
                        mode=config.mode.value,
                        family=family.value,
                        d=0,
                        t_offset_s=t_offset,
                        status=CandidateStatus.FAILED,
                        reason=str(exc),
                    )
                )
            continue

        outcome.reports[t_offset] = window.report
        if np.isnan(outcome.mu_rtt_ms):
            train_ids = [window.table.task_ids[i] for i in window.indices.train]
            outcome.mu_rtt_ms = float(np.mean([window.tasks[i].rtt for i in train_ids]))

        available = len(window.report.ranked)
        for family, d, skip in _plan(config, available, t_offset):
            base = CandidateResult(
                candidate_id=candidate_id(family, d, t_offset),
                app_id=app_id,
                node_id=node_id,
                mode=config.mode.value,
                family=family.value,
                d=d,
                t_offset_s=t_offset,
                metric_count=min(d, available),
            )
            if skip is not None:
                logger.warning("Skipping %s: %s", base.candidate_id, skip)
                outcome.candidates.append(
                    base.model_copy(update={"status": CandidateStatus.SKIPPED, "reason": skip})
                )
                continue
            try:
                result, model = _evaluate(window, node_archive, family, d, config, base)
            except PerfOracleError as exc:
                logger.warning("Candidate %s failed: %s", base.candidate_id, exc)
                result, model = base.model_copy(
                    update={"status": CandidateStatus.FAILED, "reason": str(exc)}
                ), None
            outcome.candidates.append(result)
            if model is not None:
                outcome.models[result.candidate_id] = model

    logger.info(
        "Sweep of %s on %s: %d candidates, %d trained",
        app_id,
        node_id,
        len(outcome.candidates),
        len(outcome.models),
    )
    return outcome


def select_from_sweep(outcome: SweepOutcome, tau: float) -> SelectionResult:
    """Apply the latency-constrained selection to a sweep's candidate table."""
    return select(
        outcome.candidates,
        outcome.mu_rtt_ms if not np.isnan(outcome.mu_rtt_ms) else 0.0,
        tau,
        app_id=outcome.app_id,
        node_id=outcome.node_id,
        mode=outcome.mode.value,
    )


def sweep_all(
    archive: MetricArchive,
    log: TaskLog,
    config: Optional[SweepConfig] = None,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
) -> Dict[Tuple[str, str], Tuple[SweepOutcome, SelectionResult]]:
    """Sweep and select for every (app, node) group of the task log."""
    config = config or SweepConfig()
    results = {}
    for app_id, node_id in log.groups():
        outcome = sweep(app_id, node_id, archive, log, config, catalog)
        results[(app_id, node_id)] = (outcome, select_from_sweep(outcome, config.tau))
    return results
