"""
Report schemas (Pydantic models for correlation, selection and training-mode outputs).
"""
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class MetricScore(BaseModel):
    """One ranked metric."""

    metric: str
    score: float = Field(ge=0.0, le=1.0)


class CorrelationReport(BaseModel):
    """
    Outcome of redundancy removal and metric ranking.

    Attributes:
        theta: Inter-correlation threshold used for pruning
        rows: Number of task samples S the correlations were computed on
        feature_count: Columns before any pruning (M metrics x F features)
        within_metric_counts: Columns per metric after within-metric pruning
        column_count: Columns after cross-metric pruning
        ranked: Metrics by descending score (max |r| with the target)
        surviving_columns: Metric -> columns that survived both pruning steps
    """

    model_config = ConfigDict(frozen=True)

    theta: float
    rows: int
    feature_count: int
    within_metric_counts: Dict[str, int]
    column_count: int
    ranked: List[MetricScore]
    surviving_columns: Dict[str, List[str]]

    @model_validator(mode="after")
    def scores_descending(self):
        scores = [m.score for m in self.ranked]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranked scores must be sorted in descending order")
        return self

    @property
    def metric_names(self) -> List[str]:
        return [m.metric for m in self.ranked]


class InferenceStats(BaseModel):
    """Single-row prediction latency over a fixed number of repetitions (microseconds)."""

    median_us: float
    p95_us: float
    mean_us: float
    min_us: float
    repetitions: int


class CandidateStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"
    SKIPPED = "skipped"


class CandidateResult(BaseModel):
    """
    One (family, d, t_offset) point of a sweep.

    RMSE values are on the normalized target scale; ``test_rmse_ms`` is the
    same error in milliseconds.
    """

    candidate_id: str
    app_id: str
    node_id: str
    mode: str
    family: str
    d: int
    t_offset_s: float
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    metric_count: int = 0
    column_count: int = 0
    validation_rmse: Optional[float] = None
    test_rmse: Optional[float] = None
    test_rmse_ms: Optional[float] = None
    inference: Optional[InferenceStats] = None
    train_time_ms: Optional[float] = None
    feasible: bool = False
    status: CandidateStatus = CandidateStatus.OK
    reason: Optional[str] = None

    @property
    def accuracy(self) -> Optional[float]:
        """(1 - normalized test RMSE) * 100."""
        if self.test_rmse is None:
            return None
        return (1.0 - self.test_rmse) * 100.0


class SelectionResult(BaseModel):
    """
    Winner of the latency-constrained selection for one (app, node).

    When no candidate meets the budget, ``infeasible`` is set, ``winner`` is
    None and ``unconstrained_best`` holds the lowest-RMSE candidate.
    """

    app_id: str
    node_id: str
    mode: str
    tau: float
    mu_rtt_ms: float
    budget_us: float
    winner: Optional[CandidateResult] = None
    infeasible: bool = False
    unconstrained_best: Optional[CandidateResult] = None
    candidates: List[CandidateResult] = Field(default_factory=list)

    @property
    def accuracy(self) -> Optional[float]:
        return self.winner.accuracy if self.winner is not None else None


class TrainingMode(str, Enum):
    NO_RETRAIN = "no_retrain"
    FULL_RETRAIN = "full_retrain"
    ONLINE = "online"


class ModeStageResult(BaseModel):
    """Test error of one training mode on one workload stage."""

    stage: int
    mode: TrainingMode
    status: str = "ok"
    rmse_ms: Optional[float] = None
    rmse_normalized: Optional[float] = None
    train_rows: int = 0
    test_rows: int = 0
    update_time_ms: Optional[float] = None
    reason: Optional[str] = None


class ModesReport(BaseModel):
    """Per-stage error of every training mode for one model family."""

    family: str
    stages: List[int]
    reference_target_range_ms: float
    results: List[ModeStageResult]

    def curve(self, mode: TrainingMode) -> List[Optional[float]]:
        """Normalized RMSE per stage for one mode (None where unsupported)."""
        by_stage = {r.stage: r for r in self.results if r.mode == mode}
        return [by_stage[s].rmse_normalized if s in by_stage else None for s in self.stages]
