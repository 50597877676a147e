"""
Unit tests for the training-mode comparison.
"""
import numpy as np
import pytest

from app.core.data.types import FeatureTable
from app.core.errors import InsufficientDataError, InvalidInputError
from app.core.models.base import ModelFamily
from app.core.models.search import SearchBudget
from app.core.services.training_modes_service import evaluate_modes
from app.schemas.reports import TrainingMode


def _staged_table(rows_per_stage: int = 60, seed: int = 0) -> FeatureTable:
    """
    Three stages; the net load is absent in stage 0 and rises afterwards,
    and the target depends on it exactly.
    """
    rng = np.random.default_rng(seed)
    stage = np.repeat([0, 1, 2], rows_per_stage)
    cpu = rng.random(len(stage))
    net = np.where(stage == 0, 0.0, 0.5 * stage + 0.1 * rng.random(len(stage)))
    y = 100.0 + 100.0 * cpu + 200.0 * net
    return FeatureTable(
        X=np.column_stack([cpu, net]),
        columns=("cpu::mean", "net::mean"),
        y=y,
        stages=stage,
    )


class TestEvaluateModes:
    """Test suite for evaluate_modes()."""

    @pytest.mark.unit
    def test_linear_family_under_covariate_shift(self):
        """
        Test LR when a feature is constant in the first stage.

        Scenario: The stage-0 model cannot use the net load, later stages
        depend on it.

        Expected behavior:
        - Stage 0: no_retrain and full_retrain are the same model
        - Stage 2: full_retrain is exact, no_retrain is far off
        - Online cells are marked unsupported for LR
        """
        # Arrange
        table = _staged_table()

        # Act
        report = evaluate_modes(table, "lr")

        # Assert
        no_retrain = {r.stage: r for r in report.results if r.mode == TrainingMode.NO_RETRAIN}
        full = {r.stage: r for r in report.results if r.mode == TrainingMode.FULL_RETRAIN}
        online = [r for r in report.results if r.mode == TrainingMode.ONLINE]
        assert report.stages == [0, 1, 2]
        assert no_retrain[0].rmse_ms == pytest.approx(full[0].rmse_ms)
        assert full[2].rmse_ms < 1e-6
        assert no_retrain[2].rmse_ms > 100.0
        assert [r.status for r in online] == ["unsupported"] * 3
        assert report.curve(TrainingMode.ONLINE) == [None, None, None]

    @pytest.mark.unit
    def test_reference_range_comes_from_first_stage_training_rows(self):
        table = _staged_table()

        report = evaluate_modes(table, "lr")

        stage0 = table.y[table.stages == 0]
        assert 0.0 < report.reference_target_range_ms <= float(np.ptp(stage0))
        first = report.results[0]
        assert first.rmse_normalized == pytest.approx(first.rmse_ms / report.reference_target_range_ms)

    @pytest.mark.unit
    def test_gradient_family_reports_online_updates(self):
        """
        Test a small feedforward network.

        Expected behavior:
        - Every stage has an online cell with an RMSE and an update time
        - Online training rows are the stage's own training rows
        - Full retraining sees the rows of every stage so far
        """
        table = _staged_table()
        budget = SearchBudget(
            grids={ModelFamily.FNN: {"hidden_layers": [1], "width": [8], "max_epochs": [20]}}
        )

        report = evaluate_modes(table, "fnn", budget=budget, online_passes=2)

        online = [r for r in report.results if r.mode == TrainingMode.ONLINE]
        full = [r for r in report.results if r.mode == TrainingMode.FULL_RETRAIN]
        assert [r.status for r in online] == ["ok"] * 3
        assert all(r.rmse_ms is not None and r.update_time_ms >= 0.0 for r in online)
        assert [r.train_rows for r in online] == [48, 48, 48]
        assert [r.train_rows for r in full] == [48, 96, 144]

    @pytest.mark.unit
    def test_unannotated_table_rejected(self):
        table = FeatureTable(X=np.zeros((20, 1)), columns=("cpu::mean",), y=np.arange(20.0))

        with pytest.raises(InvalidInputError):
            evaluate_modes(table, "lr")

    @pytest.mark.unit
    def test_tiny_stage_rejected(self):
        table = _staged_table().take(list(range(60)) + list(range(60, 65)))

        with pytest.raises(InsufficientDataError):
            evaluate_modes(table, "lr")
