"""
Unit tests for the report writers.
"""
import json

import pandas as pd
import pytest

from app.infrastructure.reports.tables import (
    CANDIDATE_COLUMNS,
    TIMING_COLUMNS,
    candidates_frame,
    correlation_frame,
    curves_frame,
    modes_frame,
    records,
    selection_summary,
    timings_frame,
    write_csv,
    write_json,
)
from app.schemas.reports import (
    CandidateResult,
    CandidateStatus,
    CorrelationReport,
    InferenceStats,
    MetricScore,
    ModesReport,
    ModeStageResult,
    SelectionResult,
    TrainingMode,
)


@pytest.fixture
def candidates():
    stats = InferenceStats(median_us=12.0, p95_us=20.0, mean_us=13.0, min_us=10.0, repetitions=100)
    common = dict(app_id="detector", node_id="edge-1", mode="pre_submission", t_offset_s=5.0)
    return [
        CandidateResult(candidate_id="mean-d0-t5", family="mean", d=0, test_rmse=0.3, inference=stats, **common),
        CandidateResult(
            candidate_id="lr-d1-t5",
            family="lr",
            d=1,
            test_rmse=0.1,
            inference=stats,
            train_time_ms=4.2,
            feasible=True,
            **common,
        ),
        CandidateResult(
            candidate_id="rf-d5-t5",
            family="rf",
            d=5,
            status=CandidateStatus.SKIPPED,
            reason="d=5 exceeds the 1 ranked metrics",
            **common,
        ),
    ]


class TestCandidateTables:
    """Test suite for the candidate and timing frames."""

    @pytest.mark.unit
    def test_candidate_frame_has_no_timings(self, candidates):
        """
        Expected behavior:
        - Fixed column order
        - Accuracy derived from the normalized test RMSE
        - No timing column leaks into the candidate table
        """
        frame = candidates_frame(candidates)

        assert list(frame.columns) == CANDIDATE_COLUMNS
        assert frame.loc[1, "accuracy"] == pytest.approx(90.0)
        assert frame.loc[2, "status"] == "skipped"
        assert not set(TIMING_COLUMNS[1:]) & set(frame.columns)

    @pytest.mark.unit
    def test_timing_frame(self, candidates):
        frame = timings_frame(candidates)

        assert list(frame.columns) == TIMING_COLUMNS
        assert frame.loc[1, "median_us"] == 12.0
        assert bool(frame.loc[1, "feasible"]) is True
        assert pd.isna(frame.loc[2, "median_us"])

    @pytest.mark.unit
    def test_curves_mark_the_baseline(self, candidates):
        frame = curves_frame(candidates)

        assert frame["baseline"].tolist() == [True, False, False]

    @pytest.mark.unit
    def test_csv_is_stable(self, tmp_path, candidates):
        first = write_csv(candidates_frame(candidates), tmp_path / "a.csv").read_bytes()
        second = write_csv(candidates_frame(candidates), tmp_path / "b.csv").read_bytes()

        assert first == second
        assert b"\r\n" not in first


class TestSelectionSummary:
    """Test suite for selection_summary() and write_json()."""

    @pytest.mark.unit
    def test_summary_drops_timings_and_table(self, tmp_path, candidates):
        """
        Expected behavior:
        - The winner is kept without inference statistics
        - The candidate table is left out
        - Written JSON has sorted keys
        """
        result = SelectionResult(
            app_id="detector",
            node_id="edge-1",
            mode="pre_submission",
            tau=0.01,
            mu_rtt_ms=150.0,
            budget_us=1500.0,
            winner=candidates[1],
            candidates=candidates,
        )

        summary = selection_summary(result)
        path = write_json(summary, tmp_path / "selection.json")

        assert summary["winner"]["inference"] is None
        assert summary["winner"]["train_time_ms"] is None
        assert "candidates" not in summary
        assert summary["accuracy"] == pytest.approx(90.0)
        loaded = json.loads(path.read_text())
        assert list(loaded) == sorted(loaded)

    @pytest.mark.unit
    def test_pydantic_models_are_dumped(self, tmp_path):
        report = CorrelationReport(
            theta=0.9,
            rows=50,
            feature_count=60,
            within_metric_counts={"cpu": 4, "net": 2},
            column_count=5,
            ranked=[MetricScore(metric="cpu", score=0.8), MetricScore(metric="net", score=0.3)],
            surviving_columns={"cpu": ["cpu::mean", "cpu::max"], "net": ["net::mean"]},
        )

        loaded = json.loads(write_json(report, tmp_path / "correlation.json").read_text())

        assert loaded["ranked"][0] == {"metric": "cpu", "score": 0.8}
        assert correlation_frame(report)["columns"].tolist() == ["cpu::mean;cpu::max", "net::mean"]


class TestModesFrames:
    """Test suite for the training-mode frames."""

    @pytest.mark.unit
    def test_unsupported_cells_become_none(self):
        report = ModesReport(
            family="lr",
            stages=[0],
            reference_target_range_ms=50.0,
            results=[
                ModeStageResult(stage=0, mode=TrainingMode.NO_RETRAIN, rmse_ms=5.0, rmse_normalized=0.1),
                ModeStageResult(stage=0, mode=TrainingMode.ONLINE, status="unsupported", reason="lr"),
            ],
        )

        rows = records([modes_frame(report)])

        assert rows[1]["rmse_ms"] is None
        assert rows[1]["status"] == "unsupported"
        assert rows[0]["rmse_normalized"] == pytest.approx(0.1)
