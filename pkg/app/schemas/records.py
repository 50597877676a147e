"""
Record schemas (Pydantic models for JSON Lines inputs and outputs).
"""
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class MetricLine(BaseModel):
    """One line of metrics.jsonl: a (sub-)series of one metric on one node."""

    model_config = ConfigDict(extra="forbid")

    metric: str
    node: str
    instance: Optional[str] = None
    ts_ms: List[int]
    values: List[float]

    @field_validator("metric", "node")
    def must_not_be_empty(cls, v):
        if not v or not v.strip():
            raise ValueError("must not be empty")
        return v

    @model_validator(mode="after")
    def lengths_must_match(self):
        if len(self.ts_ms) != len(self.values):
            raise ValueError(
                f"ts_ms has {len(self.ts_ms)} entries but values has {len(self.values)}"
            )
        return self


class TaskLine(BaseModel):
    """One line of tasks.jsonl."""

    model_config = ConfigDict(extra="forbid")

    task_id: str
    app: str
    node: str
    t_start_ms: int
    t_end_ms: int
    stage: Optional[int] = None

    @model_validator(mode="after")
    def end_after_start(self):
        if self.t_end_ms <= self.t_start_ms:
            raise ValueError(
                f"t_end_ms ({self.t_end_ms}) must be greater than t_start_ms ({self.t_start_ms})"
            )
        return self


class StageLine(BaseModel):
    """One line of stages.jsonl: a workload stage interval on one node."""

    model_config = ConfigDict(extra="forbid")

    node: str
    stage: int
    start_ms: int
    end_ms: int
    forced: bool = False
