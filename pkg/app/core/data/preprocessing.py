"""
Preprocessing protocol: target outlier removal, seeded splitting and
train-fitted MinMax normalization.
"""

import logging
from dataclasses import replace
from typing import Tuple

import numpy as np

from app.core.data.types import (
    Dataset,
    NormalizationParams,
    SplitIndices,
    Table,
)
from app.core.errors import InsufficientDataError, InvalidInputError

logger = logging.getLogger(__name__)

Z_THRESHOLD = 3.0
MIN_SPLIT_ROWS = 10
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


def remove_outliers(table: Table, threshold: float = Z_THRESHOLD) -> Tuple[Table, int]:
    """
    Drop rows whose target z-score exceeds ``threshold`` in absolute value.

    The z-score uses the table's own mean and population standard deviation.
    A zero-variance target drops nothing.

    Returns:
        (filtered table, number of dropped rows)

    Raises:
        InsufficientDataError: fewer than 3 rows
    """
    if table.n_rows < 3:
        raise InsufficientDataError(f"outlier removal needs at least 3 rows, got {table.n_rows}")

    y = table.y
    std = float(np.std(y))
    if std == 0.0:
        return table, 0

    z = (y - float(np.mean(y))) / std
    keep = np.flatnonzero(np.abs(z) <= threshold)
    dropped = table.n_rows - len(keep)
    if dropped:
        logger.debug("Dropped %d of %d rows as target outliers", dropped, table.n_rows)
        return table.take(keep), dropped
    return table, 0


def split_indices(
    n_rows: int, fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS, seed: int = 0
) -> SplitIndices:
    """
    Seeded permutation of row indices cut into train / validation / test.

    Validation and test sizes are floored; the remainder goes to train.

    Raises:
        InsufficientDataError: fewer than 10 rows
        InvalidInputError: fractions do not sum to 1
    """
    if n_rows < MIN_SPLIT_ROWS:
        raise InsufficientDataError(f"splitting needs at least {MIN_SPLIT_ROWS} rows, got {n_rows}")
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidInputError(f"split fractions must be three non-negative values summing to 1, got {fractions}")

    order = np.random.default_rng(seed).permutation(n_rows)
    n_val = int(np.floor(fractions[1] * n_rows + 1e-9))
    n_test = int(np.floor(fractions[2] * n_rows + 1e-9))
    n_train = n_rows - n_val - n_test

    return SplitIndices(
        train=tuple(int(i) for i in order[:n_train]),
        validation=tuple(int(i) for i in order[n_train:n_train + n_val]),
        test=tuple(int(i) for i in order[n_train + n_val:]),
    )


def split(
    table: Table, fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS, seed: int = 0
) -> Dataset:
    """Split a table into a Dataset (see ``split_indices``)."""
    return Dataset.from_indices(table, split_indices(table.n_rows, fractions, seed))


def fit_normalization(train: Table) -> NormalizationParams:
    """Per-column min/max of a training partition (sequences: per metric channel)."""
    if train.n_rows == 0:
        raise InsufficientDataError("cannot fit normalization on an empty training partition")
    axes = tuple(range(train.X.ndim - 1))
    return NormalizationParams(
        columns=train.columns,
        col_min=train.X.min(axis=axes) if train.X.shape[-1] else np.zeros(0),
        col_max=train.X.max(axis=axes) if train.X.shape[-1] else np.zeros(0),
        target_min=float(train.y.min()),
        target_max=float(train.y.max()),
    )


def apply_normalization(table: Table, params: NormalizationParams) -> Table:
    """Transform features and target of one table with fitted parameters."""
    if tuple(table.columns) != params.columns:
        raise InvalidInputError("table columns do not match the normalization parameters")
    return replace(table, X=params.transform_X(table.X), y=params.transform_y(table.y))


def normalize_minmax(dataset: Dataset) -> Tuple[Dataset, NormalizationParams]:
    """
    MinMax-normalize every column and the target with train-partition bounds.

    Validation and test use the same parameters and may leave [0, 1].
    Constant train columns map to 0.
    """
    params = fit_normalization(dataset.train)
    normalized = Dataset(
        train=apply_normalization(dataset.train, params),
        validation=apply_normalization(dataset.validation, params),
        test=apply_normalization(dataset.test, params),
        params=params,
    )
    return normalized, params


def denormalize_target(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    """Map normalized predictions back to milliseconds."""
    return params.inverse_y(values)

