"""
Unit tests for the latency-constrained selection.
"""
import pytest

from app.core.errors import InvalidInputError
from app.core.services.selection_service import budget_us, select
from app.schemas.reports import CandidateResult, CandidateStatus, InferenceStats


def _candidate(candidate_id: str, test_rmse: float, median_us: float, d: int = 1, **kwargs) -> CandidateResult:
    family = kwargs.pop("family", candidate_id.split("-", 1)[0])
    return CandidateResult(
        candidate_id=candidate_id,
        app_id="detector",
        node_id="edge-1",
        mode="pre_submission",
        family=family,
        d=d,
        t_offset_s=5.0,
        test_rmse=test_rmse,
        inference=InferenceStats(
            median_us=median_us, p95_us=median_us, mean_us=median_us, min_us=median_us, repetitions=10
        ),
        **kwargs,
    )


class TestSelect:
    """Test suite for select()."""

    @pytest.fixture
    def candidates(self):
        # mu = 100 ms and tau = 0.01 give a 1000 us budget
        return [
            _candidate("gbt-d3-t5", 0.05, 1500.0, d=3),
            _candidate("rf-d2-t5", 0.08, 1000.0, d=2),
            _candidate("lr-d1-t5", 0.10, 10.0),
        ]

    @pytest.mark.unit
    def test_budget_in_microseconds(self):
        assert budget_us(100.0, 0.01) == pytest.approx(1000.0)

    @pytest.mark.unit
    def test_most_accurate_feasible_candidate_wins(self, candidates):
        """
        Test three candidates around a 1000 us budget.

        Expected behavior:
        - The most accurate candidate is over budget and loses
        - The candidate exactly at the budget is feasible and wins
        - Feasibility is recorded on every candidate
        """
        # Act
        result = select(candidates, mu_rtt_ms=100.0, tau=0.01)

        # Assert
        assert result.winner.candidate_id == "rf-d2-t5"
        assert [c.feasible for c in result.candidates] == [False, True, True]
        assert result.infeasible is False
        assert result.budget_us == pytest.approx(1000.0)
        assert result.accuracy == pytest.approx(92.0)

    @pytest.mark.unit
    def test_winner_does_not_depend_on_order(self, candidates):
        forward = select(candidates, 100.0, 0.01)
        backward = select(list(reversed(candidates)), 100.0, 0.01)

        assert forward.winner.candidate_id == backward.winner.candidate_id

    @pytest.mark.unit
    def test_equal_error_prefers_faster_candidate(self):
        candidates = [_candidate("rf-d1-t5", 0.1, 500.0), _candidate("lr-d1-t5", 0.1, 20.0)]

        result = select(candidates, 100.0, 0.01)

        assert result.winner.candidate_id == "lr-d1-t5"

    @pytest.mark.unit
    def test_no_feasible_candidate(self, candidates):
        """
        Test a budget below every candidate's latency.

        Expected behavior:
        - infeasible is set and there is no winner
        - The unconstrained best is reported
        """
        result = select(candidates, mu_rtt_ms=0.5, tau=0.01)

        assert result.infeasible is True
        assert result.winner is None
        assert result.unconstrained_best.candidate_id == "gbt-d3-t5"

    @pytest.mark.unit
    def test_failed_candidates_are_never_feasible(self):
        failed = _candidate("fnn-d1-t5", 0.01, 1.0, status=CandidateStatus.FAILED, reason="diverged")
        ok = _candidate("lr-d1-t5", 0.2, 5.0)

        result = select([failed, ok], 100.0, 0.01)

        assert result.winner.candidate_id == "lr-d1-t5"
        assert result.candidates[0].feasible is False

    @pytest.mark.unit
    def test_empty_table_rejected(self):
        with pytest.raises(InvalidInputError):
            select([], 100.0, 0.01)
