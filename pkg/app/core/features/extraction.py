"""
Feature extraction from windowed metric sequences.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.data.types import MetricArchive, WindowedTask, WindowSpec
from app.core.data.windowing import task_sequences
from app.core.errors import EmptyWindowError, InvalidInputError
from app.core.features.catalog import DEFAULT_CATALOG, FeatureCatalog


@dataclass(frozen=True, eq=False)
class MetricFeatureBlock:
    """
    Feature vectors of one metric for S tasks.

    Attributes:
        metric_name: Metric the block was extracted from
        columns: "<metric>::<feature>" names, in catalog order
        values: (S, F) matrix, finite
        task_ids: Row order
    """

    metric_name: str
    columns: Tuple[str, ...]
    values: np.ndarray
    task_ids: Tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise InvalidInputError(
                f"block {self.metric_name!r}: values {values.shape} vs {len(self.columns)} columns"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "task_ids", tuple(self.task_ids))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def select(self, keep: Sequence[int]) -> "MetricFeatureBlock":
        """Block restricted to the given column positions."""
        keep = list(keep)
        return MetricFeatureBlock(
            metric_name=self.metric_name,
            columns=tuple(self.columns[i] for i in keep),
            values=self.values[:, keep],
            task_ids=self.task_ids,
        )


def extract_features(sequence, catalog: FeatureCatalog = DEFAULT_CATALOG) -> np.ndarray:
    """
    Evaluate the catalog on one value sequence.

    Args:
        sequence: T values, T >= 1

    Returns:
        Vector of F feature values in catalog order

    Raises:
        EmptyWindowError: empty sequence
    """
    values = np.asarray(sequence, dtype=np.float64)
    if values.ndim != 1:
        raise InvalidInputError("extract_features expects a one-dimensional sequence")
    if values.size == 0:
        raise EmptyWindowError("cannot extract features from an empty sequence")
    return catalog.evaluate(values[np.newaxis, :])[0]


def features_from_sequences(
    sequences: Sequence[np.ndarray], catalog: FeatureCatalog = DEFAULT_CATALOG
) -> np.ndarray:
    """
    (S, F) feature matrix of S sequences, evaluated per sequence length.

    Non-finite results are replaced by 0.
    """
    out = np.zeros((len(sequences), len(catalog)), dtype=np.float64)
    by_length = defaultdict(list)
    for row, seq in enumerate(sequences):
        if len(seq) == 0:
            raise EmptyWindowError(f"sequence {row} is empty")
        by_length[len(seq)].append(row)
    for length in sorted(by_length):
        rows = by_length[length]
        out[rows] = catalog.evaluate(np.vstack([sequences[r] for r in rows]))
    out[~np.isfinite(out)] = 0.0
    return out


def extract_block(
    archive: MetricArchive,
    tasks: Sequence[WindowedTask],
    spec: WindowSpec,
    metric: str,
    catalog: FeatureCatalog = DEFAULT_CATALOG,
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> MetricFeatureBlock:
    """
    Build the S x F feature block of one metric.

    All tasks must run on the same node.

    Raises:
        EmptyWindowError: a task has no samples of this metric in its window
        UnknownKeyError: the metric does not exist on the node
    """
    nodes = {t.node_id for t in tasks}
    if len(nodes) > 1:
        raise InvalidInputError(f"tasks span several nodes: {sorted(nodes)}")
    if not tasks:
        return MetricFeatureBlock(metric, tuple(catalog.column_names(metric)), np.zeros((0, len(catalog))), ())

    series = archive.get(tasks[0].node_id, metric)
    sequences = task_sequences(series, tasks, spec, rtt_estimates)
    return MetricFeatureBlock(
        metric_name=metric,
        columns=tuple(catalog.column_names(metric)),
        values=features_from_sequences(sequences, catalog),
        task_ids=tuple(t.task_id for t in tasks),
    )
