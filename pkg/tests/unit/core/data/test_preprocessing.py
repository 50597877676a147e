"""
Unit tests for outlier removal, splitting and normalization.
"""
import numpy as np
import pytest

from app.core.data.preprocessing import (
    denormalize_target,
    normalize_minmax,
    remove_outliers,
    split,
    split_indices,
)
from app.core.data.types import FeatureTable
from app.core.errors import InsufficientDataError, InvalidInputError


def _table(y, X=None) -> FeatureTable:
    y = np.asarray(y, dtype=float)
    if X is None:
        X = np.column_stack([np.arange(len(y), dtype=float), np.full(len(y), 2.0)])
    return FeatureTable(X=X, columns=("cpu::mean", "mem::mean"), y=y)


class TestRemoveOutliers:
    """Test suite for remove_outliers()."""

    @pytest.mark.unit
    def test_single_extreme_target_dropped(self):
        """
        Test a table with one RTT far above the others.

        Scenario: 20 rows at 10 ms and one at 1000 ms; the outlier's z-score
        is sqrt(20), above 3.

        Expected behavior:
        - Exactly the outlier row is dropped
        """
        # Arrange
        table = _table([10.0] * 20 + [1000.0])

        # Act
        kept, dropped = remove_outliers(table)

        # Assert
        assert dropped == 1
        assert kept.n_rows == 20
        assert kept.y.max() == 10.0

    @pytest.mark.unit
    def test_constant_target_keeps_everything(self):
        table = _table([50.0] * 5)

        kept, dropped = remove_outliers(table)

        assert dropped == 0
        assert kept is table

    @pytest.mark.unit
    def test_too_few_rows_rejected(self):
        with pytest.raises(InsufficientDataError):
            remove_outliers(_table([1.0, 2.0]))


class TestSplitIndices:
    """Test suite for split_indices()."""

    @pytest.mark.unit
    def test_partitions_cover_rows_once(self):
        """
        Expected behavior:
        - 80 / 10 / 10 rows for n = 100
        - Partitions are disjoint and cover every row
        """
        indices = split_indices(100, seed=7)

        assert (len(indices.train), len(indices.validation), len(indices.test)) == (80, 10, 10)
        union = set(indices.train) | set(indices.validation) | set(indices.test)
        assert union == set(range(100))

    @pytest.mark.unit
    def test_validation_and_test_sizes_are_floored(self):
        indices = split_indices(15)

        assert (len(indices.train), len(indices.validation), len(indices.test)) == (13, 1, 1)

    @pytest.mark.unit
    def test_same_seed_same_split(self):
        assert split_indices(50, seed=3) == split_indices(50, seed=3)
        assert split_indices(50, seed=3) != split_indices(50, seed=4)

    @pytest.mark.unit
    def test_too_few_rows_rejected(self):
        with pytest.raises(InsufficientDataError):
            split_indices(9)

    @pytest.mark.unit
    def test_fractions_must_sum_to_one(self):
        with pytest.raises(InvalidInputError):
            split_indices(100, fractions=(0.8, 0.2, 0.2))


class TestNormalizeMinmax:
    """Test suite for normalize_minmax()."""

    @pytest.mark.unit
    def test_bounds_come_from_train_only(self):
        """
        Test normalization of a 20-row table.

        Expected behavior:
        - Train features and target lie in [0, 1]
        - Parameters equal the train partition's min and max
        - The constant column is 0 everywhere
        - Denormalizing the normalized target restores milliseconds
        """
        # Arrange
        table = _table(np.linspace(100.0, 300.0, 20))
        dataset = split(table, seed=1)

        # Act
        normalized, params = normalize_minmax(dataset)

        # Assert
        assert normalized.train.X.min() >= 0.0
        assert normalized.train.X.max() <= 1.0
        assert params.target_min == dataset.train.y.min()
        assert params.target_max == dataset.train.y.max()
        assert np.all(normalized.test.X[:, 1] == 0.0)
        np.testing.assert_allclose(denormalize_target(normalized.test.y, params), dataset.test.y)
        assert normalized.params is params
