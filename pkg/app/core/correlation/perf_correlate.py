"""
Redundancy removal and correlation ranking of metric-features.

Pruning visits column pairs (i, j), i < j, in column order. When both are
still alive and |corr(i, j)| > theta, the column with the lower |corr with
target| is dropped; on a tie the later column goes. One pass leaves no
surviving pair above theta.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.core.correlation.pearson import correlation_matrix, target_correlations
from app.core.data.types import FeatureTable
from app.core.errors import InsufficientDataError, InvalidInputError
from app.core.features.extraction import MetricFeatureBlock
from app.schemas.reports import CorrelationReport, MetricScore

logger = logging.getLogger(__name__)

DEFAULT_THETA = 0.90
MIN_ROWS = 3


def greedy_prune(X: np.ndarray, y: np.ndarray, theta: float = DEFAULT_THETA) -> List[int]:
    """
    Positions of the columns of X that survive pairwise redundancy removal.

    Args:
        X: (S, K) matrix
        y: (S,) target
        theta: Absolute inter-correlation above which a pair is redundant

    Returns:
        Sorted surviving column positions
    """
    K = X.shape[1]
    if K == 0:
        return []
    C = np.abs(correlation_matrix(X))
    r = np.abs(target_correlations(X, y))
    alive = np.ones(K, dtype=bool)

    for i in range(K):
        if not alive[i]:
            continue
        hits = np.flatnonzero(alive[i + 1:] & (C[i, i + 1:] > theta)) + i + 1
        if hits.size == 0:
            continue
        stronger = np.flatnonzero(r[hits] > r[i])
        if stronger.size:
            # the first stronger partner removes i; earlier partners were removed by i
            first = stronger[0]
            alive[hits[:first]] = False
            alive[i] = False
        else:
            alive[hits] = False

    return [int(k) for k in np.flatnonzero(alive)]


def _check_rows(n_rows: int, n_targets: int) -> None:
    if n_rows != n_targets:
        raise InvalidInputError(f"{n_rows} rows but {n_targets} targets")
    if n_rows < MIN_ROWS:
        raise InsufficientDataError(f"correlation pruning needs at least {MIN_ROWS} rows, got {n_rows}")


def prune_within_metric(
    block: MetricFeatureBlock, rtt, theta: float = DEFAULT_THETA
) -> MetricFeatureBlock:
    """Drop redundant features inside one metric's block."""
    rtt = np.asarray(rtt, dtype=np.float64)
    _check_rows(block.n_rows, len(rtt))
    return block.select(greedy_prune(block.values, rtt, theta))


def prune_across_metrics(
    blocks: Sequence[MetricFeatureBlock], rtt, theta: float = DEFAULT_THETA
) -> FeatureTable:
    """
    Concatenate blocks (in the given metric order) and drop redundant columns
    across metrics.

    Returns:
        S x K-bar FeatureTable with the target as ``y``
    """
    if not blocks:
        raise InvalidInputError("no blocks to combine")
    rtt = np.asarray(rtt, dtype=np.float64)
    for block in blocks:
        _check_rows(block.n_rows, len(rtt))
        if block.task_ids != blocks[0].task_ids:
            raise InvalidInputError("blocks must share the same task rows")

    X = np.hstack([b.values for b in blocks])
    columns = tuple(c for b in blocks for c in b.columns)
    table = FeatureTable(
        X=X,
        columns=columns,
        y=rtt,
        provenance={b.metric_name: b.columns for b in blocks},
        task_ids=blocks[0].task_ids,
    )
    keep = greedy_prune(X, rtt, theta)
    logger.debug("Cross-metric pruning kept %d of %d columns", len(keep), len(columns))
    return table.select_columns(columns[k] for k in keep)


def rank_metrics(table: FeatureTable, rtt=None, theta: float = DEFAULT_THETA) -> CorrelationReport:
    """
    Score every metric by the largest |Pearson| of its columns with the
    target and sort descending (ties by metric name).
    """
    y = table.y if rtt is None else np.asarray(rtt, dtype=np.float64)
    if table.X.shape[1] == 0 or table.n_rows == 0:
        raise InvalidInputError("cannot rank metrics of an empty table")

    r = np.abs(target_correlations(table.X, y))
    position = {c: k for k, c in enumerate(table.columns)}
    scores: List[Tuple[str, float]] = []
    for metric, cols in table.provenance.items():
        if cols:
            scores.append((metric, float(max(r[position[c]] for c in cols))))
    scores.sort(key=lambda item: (-item[1], item[0]))

    return CorrelationReport(
        theta=theta,
        rows=table.n_rows,
        feature_count=table.X.shape[1],
        within_metric_counts={m: len(cols) for m, cols in table.provenance.items() if cols},
        column_count=table.X.shape[1],
        ranked=[MetricScore(metric=m, score=s) for m, s in scores],
        surviving_columns={m: list(table.provenance[m]) for m, _ in scores},
    )


def top_d_columns(report: CorrelationReport, table: FeatureTable, d: int) -> FeatureTable:
    """
    Restrict a table to the columns of the d best-ranked metrics.

    Raises:
        InvalidInputError: d outside [1, number of ranked metrics]
    """
    if not 1 <= d <= len(report.ranked):
        raise InvalidInputError(f"d must be in [1, {len(report.ranked)}], got {d}")
    wanted = [c for m in report.metric_names[:d] for c in report.surviving_columns[m]]
    return table.select_columns(wanted)


def blocks_from_table(table: FeatureTable) -> List[MetricFeatureBlock]:
    """Split a table back into per-metric blocks, in provenance order."""
    position = {c: k for k, c in enumerate(table.columns)}
    return [
        MetricFeatureBlock(
            metric_name=metric,
            columns=cols,
            values=table.X[:, [position[c] for c in cols]],
            task_ids=table.task_ids,
        )
        for metric, cols in table.provenance.items()
        if cols
    ]


def perf_correlate(
    table: FeatureTable, theta: float = DEFAULT_THETA
) -> Tuple[FeatureTable, CorrelationReport]:
    """
    Full metric selection on one feature table: within-metric pruning,
    cross-metric pruning, then ranking.

    Returns:
        (pruned table, report)
    """
    rtt = table.y
    blocks = [prune_within_metric(b, rtt, theta) for b in blocks_from_table(table)]
    within: Dict[str, int] = {b.metric_name: len(b.columns) for b in blocks}
    pruned = prune_across_metrics([b for b in blocks if b.columns], rtt, theta)
    report = rank_metrics(pruned, rtt, theta)
    report = report.model_copy(
        update={"feature_count": table.X.shape[1], "within_metric_counts": within}
    )
    logger.debug(
        "perfCorrelate: K=%d, K-bar=%d, %d metrics ranked",
        table.X.shape[1],
        pruned.X.shape[1],
        len(report.ranked),
    )
    # restore the row metadata of the input table
    full = table.select_columns(pruned.columns)
    return full, report
