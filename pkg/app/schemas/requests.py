"""
Request schemas (Pydantic models for run and sweep configuration).
"""
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.data.types import WindowMode
from app.core.errors import ConfigurationError
from app.core.models.base import ModelFamily

DEFAULT_WINDOWS_S = (5.0, 20.0, 60.0)
DEFAULT_FAMILIES = (
    ModelFamily.LR,
    ModelFamily.RF,
    ModelFamily.GBT,
    ModelFamily.FNN,
    ModelFamily.RNN,
    ModelFamily.CNN,
)


class SweepConfig(BaseModel):
    """
    Search space and constraints of one selection sweep.

    Attributes:
        windows_s: Candidate t_offset values in seconds
        feature_step: d runs over step, 2*step, ... plus "all metrics"
        feature_counts: Explicit d values overriding feature_step
        families: Model families to train
        sequential_windows_s: Windows sequential families are restricted to
        include_baseline: Add the mean predictor as a d = 0 candidate
        mode: Window mode of every candidate
        tau: Inference budget as a fraction of the mean RTT
        theta: Inter-correlation threshold of redundancy removal
        seed: Split, search and initialisation seed
        fractions: Train / validation / test split fractions
        max_trials: Upper bound on hyperparameter trials per candidate
        repetitions: Timed predictions per inference benchmark
        warmup: Untimed predictions before each benchmark
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    windows_s: List[float] = Field(default_factory=lambda: list(DEFAULT_WINDOWS_S))
    feature_step: int = Field(default=10, ge=1)
    feature_counts: Optional[List[int]] = None
    families: List[ModelFamily] = Field(default_factory=lambda: list(DEFAULT_FAMILIES))
    sequential_windows_s: List[float] = Field(default_factory=lambda: [5.0])
    include_baseline: bool = True
    mode: WindowMode = WindowMode.PRE_SUBMISSION
    tau: float = Field(default=0.01, gt=0)
    theta: float = Field(default=0.90, gt=0, le=1)
    seed: int = 0
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    max_trials: Optional[int] = Field(default=4, ge=1)
    repetitions: int = Field(default=1000, ge=1)
    warmup: int = Field(default=100, ge=0)

    @field_validator("windows_s", "sequential_windows_s")
    def windows_positive(cls, v):
        if any(not w > 0 for w in v):
            raise ValueError("windows must be positive")
        return sorted(set(v))

    @field_validator("windows_s")
    def windows_not_empty(cls, v):
        if not v:
            raise ValueError("at least one window is required")
        return v

    @field_validator("feature_counts")
    def counts_positive(cls, v):
        if v is None:
            return v
        if not v or any(d < 1 for d in v):
            raise ValueError("feature counts must be >= 1")
        return sorted(set(v))

    @field_validator("families")
    def families_unique(cls, v):
        if not v:
            raise ValueError("at least one family is required")
        if len(v) != len(set(v)):
            raise ValueError("duplicate families")
        if ModelFamily.MEAN in v:
            raise ValueError("the mean predictor is added through include_baseline")
        return v

    @field_validator("fractions")
    def fractions_valid(cls, v):
        if any(f < 0 for f in v) or abs(sum(v) - 1.0) > 1e-9 or v[0] <= 0:
            raise ValueError("fractions must be non-negative, sum to 1 and keep a training share")
        return v

    @model_validator(mode="after")
    def mode_supported(self):
        if self.mode is WindowMode.FULL_TASK:
            raise ValueError("full_task windows see the outcome and cannot be used for selection")
        return self

    def feature_counts_for(self, available: int) -> List[int]:
        """d values for a window with ``available`` ranked metrics; "all" is always last."""
        if available < 1:
            return []
        if self.feature_counts is not None:
            return list(self.feature_counts)
        counts = list(range(self.feature_step, available, self.feature_step))
        return counts + [available]

    def windows_for(self, family: ModelFamily) -> List[float]:
        if family.is_sequential:
            return [w for w in self.windows_s if w in self.sequential_windows_s]
        return list(self.windows_s)


class RunConfig(BaseModel):
    """
    Validated parameters of one CLI invocation, echoed into ``run_config.json``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    metrics: Optional[str] = None
    tasks: Optional[str] = None
    scenario: Optional[str] = None
    app: Optional[str] = None
    node: Optional[str] = None
    out: str
    family: Optional[ModelFamily] = None
    sweep: SweepConfig = Field(default_factory=SweepConfig)


def build_config(schema, **values):
    """
    Validate a configuration model from keyword values.

    Raises:
        ConfigurationError: naming the first failing field path
    """
    try:
        return schema.model_validate(values)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(part) for part in first.get("loc", ()))
        raise ConfigurationError(first.get("msg", str(exc)), path or schema.__name__) from None
