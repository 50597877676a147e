"""
Tabular and JSON report writers.

Timing-dependent values (inference statistics, training and update times)
are written to separate timing files so every other report is byte-stable
for a fixed seed.
"""

import json
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from app.schemas.reports import CandidateResult, CorrelationReport, ModesReport, SelectionResult

CANDIDATE_COLUMNS = [
    "candidate_id",
    "app_id",
    "node_id",
    "mode",
    "family",
    "d",
    "t_offset_s",
    "metric_count",
    "column_count",
    "validation_rmse",
    "test_rmse",
    "test_rmse_ms",
    "accuracy",
    "status",
    "reason",
    "hyperparameters",
]

TIMING_COLUMNS = [
    "candidate_id",
    "median_us",
    "p95_us",
    "mean_us",
    "min_us",
    "repetitions",
    "train_time_ms",
    "feasible",
]

CURVE_COLUMNS = ["family", "t_offset_s", "d", "test_rmse", "status", "baseline"]


def write_json(data: Union[BaseModel, Any], path) -> Path:
    """Pretty-printed JSON with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, BaseModel):
        data = data.model_dump(mode="json")
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_csv(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def without_timings(candidate: CandidateResult) -> CandidateResult:
    return candidate.model_copy(update={"inference": None, "train_time_ms": None})


def candidates_frame(candidates: Sequence[CandidateResult]) -> pd.DataFrame:
    rows = []
    for c in candidates:
        rows.append(
            {
                "candidate_id": c.candidate_id,
                "app_id": c.app_id,
                "node_id": c.node_id,
                "mode": c.mode,
                "family": c.family,
                "d": c.d,
                "t_offset_s": c.t_offset_s,
                "metric_count": c.metric_count,
                "column_count": c.column_count,
                "validation_rmse": c.validation_rmse,
                "test_rmse": c.test_rmse,
                "test_rmse_ms": c.test_rmse_ms,
                "accuracy": c.accuracy,
                "status": c.status.value,
                "reason": c.reason,
                "hyperparameters": json.dumps(c.hyperparameters, sort_keys=True),
            }
        )
    return pd.DataFrame(rows, columns=CANDIDATE_COLUMNS)


def timings_frame(candidates: Sequence[CandidateResult]) -> pd.DataFrame:
    rows = []
    for c in candidates:
        stats = c.inference
        rows.append(
            {
                "candidate_id": c.candidate_id,
                "median_us": stats.median_us if stats else None,
                "p95_us": stats.p95_us if stats else None,
                "mean_us": stats.mean_us if stats else None,
                "min_us": stats.min_us if stats else None,
                "repetitions": stats.repetitions if stats else None,
                "train_time_ms": c.train_time_ms,
                "feasible": c.feasible,
            }
        )
    return pd.DataFrame(rows, columns=TIMING_COLUMNS)


def curves_frame(candidates: Sequence[CandidateResult]) -> pd.DataFrame:
    """RMSE-vs-d data behind the sweep plot; one row per candidate."""
    rows = [
        {
            "family": c.family,
            "t_offset_s": c.t_offset_s,
            "d": c.d,
            "test_rmse": c.test_rmse,
            "status": c.status.value,
            "baseline": c.family == "mean",
        }
        for c in candidates
    ]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def selection_summary(result: SelectionResult) -> dict:
    """Selection without timing fields and without the candidate table."""
    summary = result.model_copy(
        update={
            "winner": without_timings(result.winner) if result.winner else None,
            "unconstrained_best": (
                without_timings(result.unconstrained_best) if result.unconstrained_best else None
            ),
            "candidates": [],
        }
    ).model_dump(mode="json", exclude={"candidates"})
    summary["accuracy"] = result.accuracy
    return summary


def correlation_frame(report: CorrelationReport) -> pd.DataFrame:
    rows = [
        {
            "rank": rank,
            "metric": entry.metric,
            "score": entry.score,
            "columns": ";".join(report.surviving_columns.get(entry.metric, [])),
        }
        for rank, entry in enumerate(report.ranked, start=1)
    ]
    return pd.DataFrame(rows, columns=["rank", "metric", "score", "columns"])


def modes_frame(report: ModesReport) -> pd.DataFrame:
    rows = [
        {
            "stage": r.stage,
            "mode": r.mode.value,
            "status": r.status,
            "rmse_ms": r.rmse_ms,
            "rmse_normalized": r.rmse_normalized,
            "train_rows": r.train_rows,
            "test_rows": r.test_rows,
            "reason": r.reason,
        }
        for r in report.results
    ]
    return pd.DataFrame(
        rows,
        columns=["stage", "mode", "status", "rmse_ms", "rmse_normalized", "train_rows", "test_rows", "reason"],
    )


def modes_timings_frame(report: ModesReport) -> pd.DataFrame:
    rows = [
        {"stage": r.stage, "mode": r.mode.value, "update_time_ms": r.update_time_ms}
        for r in report.results
    ]
    return pd.DataFrame(rows, columns=["stage", "mode", "update_time_ms"])


def records(frames: Iterable[pd.DataFrame]) -> List[dict]:
    """Rows of several frames as JSON-ready dicts (NaN -> None)."""
    out: List[dict] = []
    for frame in frames:
        out.extend(frame.astype(object).where(frame.notna(), None).to_dict(orient="records"))
    return out
