"""
Training-mode comparison for one (app, node).
"""

import logging
from typing import Optional

import numpy as np

from app.core.correlation.perf_correlate import perf_correlate, top_d_columns
from app.core.data.assembly import assemble_feature_table, assemble_sequences
from app.core.data.stability import drop_stable_metrics
from app.core.data.types import MetricArchive, TaskLog, Table, WindowMode, WindowSpec
from app.core.errors import InvalidInputError
from app.core.features.catalog import DEFAULT_CATALOG, FeatureCatalog
from app.core.models.base import ModelFamily
from app.core.models.search import SearchBudget
from app.core.services.training_modes_service import DEFAULT_ONLINE_PASSES, evaluate_modes
from app.schemas.reports import ModesReport
from app.schemas.requests import SweepConfig

logger = logging.getLogger(__name__)


def staged_table(
    archive: MetricArchive,
    log: TaskLog,
    app_id: str,
    node_id: str,
    family,
    config: Optional[SweepConfig] = None,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
) -> Table:
    """
    Stage-annotated table on the first configured window.

    Metrics are selected on the first stage's rows only; d is the first
    configured feature count, or every ranked metric.

    Raises:
        InvalidInputError: the pair's tasks carry no stage annotation
    """
    config = config or SweepConfig()
    family = ModelFamily(family)
    tasks = log.group(app_id, node_id)
    if all(t.stage is None for t in tasks):
        raise InvalidInputError(f"tasks of {app_id!r} on {node_id!r} carry no workload stage")

    spec = WindowSpec(config.windows_s[0], WindowMode.PRE_SUBMISSION, archive.scrape_interval_ms)
    windows = [(t.node_id, t.t_start - spec.offset_ms, t.t_start - 1) for t in tasks]
    node_archive = drop_stable_metrics(archive.for_node(node_id), windows)
    table = assemble_feature_table(node_archive, tasks, spec, catalog)

    first_stage = int(min(s for s in table.stages if s >= 0))
    reference_rows = np.flatnonzero(table.stages == first_stage)
    _, report = perf_correlate(table.take(reference_rows), config.theta)
    table = table.select_columns(c for cols in report.surviving_columns.values() for c in cols)
    d = min(config.feature_counts[0], len(report.ranked)) if config.feature_counts else len(report.ranked)
    logger.debug("Modes table for %s on %s: %d rows, d=%d", app_id, node_id, table.n_rows, d)

    if family.is_sequential:
        by_id = {t.task_id: t for t in tasks}
        rows = [by_id[i] for i in table.task_ids]
        return assemble_sequences(node_archive, rows, spec, report.metric_names[:d])
    return top_d_columns(report, table, d)


def run_modes(
    archive: MetricArchive,
    log: TaskLog,
    app_id: str,
    node_id: str,
    family,
    config: Optional[SweepConfig] = None,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    online_passes: int = DEFAULT_ONLINE_PASSES,
) -> ModesReport:
    """Build the staged table of a pair and compare the three training modes on it."""
    config = config or SweepConfig()
    table = staged_table(archive, log, app_id, node_id, family, config, catalog)
    budget = SearchBudget(max_candidates=config.max_trials, seed=config.seed)
    return evaluate_modes(
        table,
        family,
        budget=budget,
        fractions=config.fractions,
        seed=config.seed,
        online_passes=online_passes,
    )
