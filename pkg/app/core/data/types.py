"""
Domain types for monitoring data, task logs and assembled datasets.

All types are immutable after construction: numpy arrays are copied and
flagged read-only, so values can be shared freely between worker threads.
"""

import hashlib
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.core.errors import DataIntegrityError, InvalidInputError, UnknownKeyError
from app.schemas.records import MetricLine

SAMPLING_PERIOD_MS = 200


def _frozen(array, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# Monitoring data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MetricSeries:
    """
    One monitoring metric's timestamped value stream on one node.

    Attributes:
        metric_name: Opaque metric name
        node_id: Node the metric was scraped from
        timestamps: Strictly increasing ms-epoch integers
        values: One float per timestamp
    """

    metric_name: str
    node_id: str
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        ts = _frozen(self.timestamps, np.int64)
        vs = _frozen(self.values, np.float64)
        if ts.ndim != 1 or vs.ndim != 1:
            raise InvalidInputError("timestamps and values must be one-dimensional")
        if ts.shape != vs.shape:
            raise InvalidInputError(
                f"{self.metric_name}@{self.node_id}: {len(ts)} timestamps but {len(vs)} values"
            )
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise DataIntegrityError(
                f"{self.metric_name}@{self.node_id}: timestamps must be strictly increasing"
            )
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    def __len__(self) -> int:
        return len(self.timestamps)

    def equals(self, other: "MetricSeries") -> bool:
        """Exact equality of names, timestamps and values."""
        return (
            self.metric_name == other.metric_name
            and self.node_id == other.node_id
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )


SeriesKey = Tuple[str, str]  # (node_id, metric_name)


@dataclass(frozen=True, eq=False)
class MetricArchive:
    """
    All metric series of a collection, keyed by (node_id, metric_name).

    Attributes:
        series: Series per (node_id, metric_name), iterated in sorted key order
        scrape_interval_ms: Sampling period the archive was collected with
        period: (first timestamp, last timestamp) over all series, or None if empty
    """

    series: Mapping[SeriesKey, MetricSeries]
    scrape_interval_ms: int = SAMPLING_PERIOD_MS
    period: Optional[Tuple[int, int]] = None

    def __post_init__(self) -> None:
        ordered = {key: self.series[key] for key in sorted(self.series)}
        object.__setattr__(self, "series", ordered)
        if self.period is None and ordered:
            starts = [int(s.timestamps[0]) for s in ordered.values() if len(s)]
            ends = [int(s.timestamps[-1]) for s in ordered.values() if len(s)]
            if starts:
                object.__setattr__(self, "period", (min(starts), max(ends)))

    @classmethod
    def from_records(
        cls, records: Iterable[MetricLine], scrape_interval_ms: int = SAMPLING_PERIOD_MS
    ) -> "MetricArchive":
        """
        Build an archive from raw (sub-)series records.

        Records sharing (node, metric) but with different ``instance`` values
        (e.g. per-core CPU series) are mean-aggregated per timestamp.
        Repeated timestamps within one (node, metric, instance) are rejected.

        Args:
            records: Parsed metric lines
            scrape_interval_ms: Sampling period recorded in the archive

        Returns:
            MetricArchive with one aggregated series per (node, metric)

        Raises:
            DataIntegrityError: duplicate (node, metric, instance, timestamp)
        """
        parts: Dict[SeriesKey, Dict[Optional[str], Dict[int, float]]] = defaultdict(dict)

        for record in records:
            key = (record.node, record.metric)
            points = parts[key].setdefault(record.instance, {})
            for ts, value in zip(record.ts_ms, record.values):
                if ts in points:
                    raise DataIntegrityError(
                        f"duplicate timestamp {ts} for metric {record.metric!r} "
                        f"on node {record.node!r} (instance {record.instance!r})"
                    )
                points[ts] = float(value)

        series: Dict[SeriesKey, MetricSeries] = {}
        for (node, metric), instances in parts.items():
            if len(instances) == 1:
                only = next(iter(instances.values()))
                stamps = sorted(only)
                values = [only[ts] for ts in stamps]
            else:
                stamps = sorted({ts for points in instances.values() for ts in points})
                values = []
                for ts in stamps:
                    observed = [
                        instances[name][ts]
                        for name in sorted(instances, key=lambda n: "" if n is None else n)
                        if ts in instances[name]
                    ]
                    values.append(float(np.mean(observed)))
            series[(node, metric)] = MetricSeries(metric, node, np.array(stamps), np.array(values))

        return cls(series=series, scrape_interval_ms=scrape_interval_ms)

    def __len__(self) -> int:
        return len(self.series)

    @property
    def nodes(self) -> List[str]:
        return sorted({node for node, _ in self.series})

    @property
    def metric_names(self) -> List[str]:
        return sorted({metric for _, metric in self.series})

    def metrics_for_node(self, node_id: str) -> List[str]:
        """Sorted metric names available on one node."""
        return [metric for node, metric in self.series if node == node_id]

    def get(self, node_id: str, metric_name: str) -> MetricSeries:
        try:
            return self.series[(node_id, metric_name)]
        except KeyError:
            raise UnknownKeyError(
                f"no metric {metric_name!r} on node {node_id!r}"
            ) from None

    def for_node(self, node_id: str) -> "MetricArchive":
        """Archive restricted to one node."""
        if node_id not in self.nodes:
            raise UnknownKeyError(f"unknown node {node_id!r}")
        kept = {key: s for key, s in self.series.items() if key[0] == node_id}
        return MetricArchive(series=kept, scrape_interval_ms=self.scrape_interval_ms)

    def without(self, keys: Iterable[SeriesKey]) -> "MetricArchive":
        """Archive with the given series removed."""
        dropped = set(keys)
        kept = {key: s for key, s in self.series.items() if key not in dropped}
        return MetricArchive(
            series=kept, scrape_interval_ms=self.scrape_interval_ms, period=self.period
        )

    def to_records(self) -> List[MetricLine]:
        """Aggregated series as metric lines (instance = None)."""
        return [
            MetricLine(
                metric=s.metric_name,
                node=s.node_id,
                instance=None,
                ts_ms=s.timestamps.tolist(),
                values=s.values.tolist(),
            )
            for s in self.series.values()
        ]

    def equals(self, other: "MetricArchive") -> bool:
        """Same keys, same series and same scrape interval."""
        if self.scrape_interval_ms != other.scrape_interval_ms:
            return False
        if list(self.series) != list(other.series):
            return False
        return all(self.series[k].equals(other.series[k]) for k in self.series)


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------


class TaskRecord(BaseModel):
    """One task's submission and completion on one (application, node)."""

    model_config = ConfigDict(frozen=True)

    task_id: str
    app_id: str
    node_id: str
    t_start: int
    t_end: int
    stage: Optional[int] = None

    @model_validator(mode="after")
    def end_after_start(self):
        if self.t_end <= self.t_start:
            raise ValueError(f"task {self.task_id}: t_end must be greater than t_start")
        return self

    @property
    def rtt(self) -> int:
        """Round-trip time in ms."""
        return self.t_end - self.t_start


@dataclass(frozen=True)
class RunningTask:
    """A submitted task that has not completed yet; windows ending at t_end are unavailable."""

    task_id: str
    app_id: str
    node_id: str
    t_start: int
    stage: Optional[int] = None
    t_end: Optional[int] = field(default=None, init=False)


WindowedTask = Union[TaskRecord, RunningTask]


@dataclass(frozen=True)
class StageBoundary:
    """Interval of one workload stage on one node."""

    node_id: str
    stage_id: int
    start_ms: int
    end_ms: int
    forced: bool = False


GroupKey = Tuple[str, str]  # (app_id, node_id)


@dataclass(frozen=True)
class TaskLog:
    """
    Task records grouped by (app_id, node_id), plus stage annotations.

    Records are kept sorted by (app, node, t_start, task_id).
    """

    records: Tuple[TaskRecord, ...]
    stages: Tuple[StageBoundary, ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(
            sorted(self.records, key=lambda r: (r.app_id, r.node_id, r.t_start, r.task_id))
        )
        ids = [r.task_id for r in ordered]
        if len(ids) != len(set(ids)):
            raise DataIntegrityError("duplicate task_id in task log")
        object.__setattr__(self, "records", ordered)
        object.__setattr__(
            self, "stages", tuple(sorted(self.stages, key=lambda s: (s.node_id, s.stage_id)))
        )

    def __len__(self) -> int:
        return len(self.records)

    def groups(self) -> Dict[GroupKey, Tuple[TaskRecord, ...]]:
        """Records per (app_id, node_id), each sorted by t_start."""
        grouped: Dict[GroupKey, List[TaskRecord]] = defaultdict(list)
        for record in self.records:
            grouped[(record.app_id, record.node_id)].append(record)
        return {key: tuple(grouped[key]) for key in sorted(grouped)}

    def group(self, app_id: str, node_id: str) -> Tuple[TaskRecord, ...]:
        records = self.groups().get((app_id, node_id))
        if not records:
            raise UnknownKeyError(f"no tasks for app {app_id!r} on node {node_id!r}")
        return records

    def stages_for_node(self, node_id: str) -> Tuple[StageBoundary, ...]:
        return tuple(s for s in self.stages if s.node_id == node_id)


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------


class WindowMode(str, Enum):
    """Which part of a task's life a monitoring window covers."""

    PRE_SUBMISSION = "pre_submission"
    FULL_TASK = "full_task"
    MID_EXECUTION = "mid_execution"


@dataclass(frozen=True)
class WindowSpec:
    """
    Length of the historical state and the window mode.

    Attributes:
        t_offset: Seconds of history before submission
        mode: Window mode
        period_ms: Nominal sampling period of the grid
    """

    t_offset: float
    mode: WindowMode = WindowMode.PRE_SUBMISSION
    period_ms: int = SAMPLING_PERIOD_MS

    def __post_init__(self) -> None:
        if not self.t_offset > 0:
            raise InvalidInputError(f"t_offset must be positive, got {self.t_offset}")
        object.__setattr__(self, "mode", WindowMode(self.mode))

    @property
    def offset_ms(self) -> int:
        return int(round(self.t_offset * 1000))

    @property
    def grid_points(self) -> int:
        """T for pre-submission windows (t_offset * 5 at 200 ms)."""
        return int(math.ceil(self.offset_ms / self.period_ms))

    def bounds(self, t_start: int, t_end: Optional[int] = None, rtt_est: Optional[float] = None):
        """
        Window bounds for one task.

        Returns:
            (start_ms, end_ms, end_inclusive)
        """
        start = t_start - self.offset_ms
        if self.mode is WindowMode.PRE_SUBMISSION:
            return start, t_start, False
        if self.mode is WindowMode.FULL_TASK:
            if t_end is None:
                raise InvalidInputError("full_task windows need t_end")
            return start, t_end, True
        if rtt_est is None:
            raise InvalidInputError("mid_execution windows need an RTT estimate")
        return start, t_start + int(round(0.5 * rtt_est)), True


@dataclass(frozen=True, eq=False)
class Segment:
    """Raw samples of one metric inside one task window."""

    timestamps: np.ndarray
    values: np.ndarray
    start_ms: int
    end_ms: int
    end_inclusive: bool

    @property
    def is_empty(self) -> bool:
        return len(self.timestamps) == 0


@dataclass(frozen=True, eq=False)
class AlignedSample:
    """
    One task's metric sequences on the shared grid.

    Attributes:
        task_id: Task identifier
        sequences: Metric name -> resampled values (length T)
        target: RTT or remaining RTT in ms
    """

    task_id: str
    sequences: Mapping[str, np.ndarray]
    target: float

    def __post_init__(self) -> None:
        lengths = {len(v) for v in self.sequences.values()}
        if len(lengths) > 1:
            raise InvalidInputError(f"task {self.task_id}: sequences of unequal length {lengths}")
        for values in self.sequences.values():
            if not np.all(np.isfinite(values)):
                raise InvalidInputError(f"task {self.task_id}: non-finite value in sequence")


# ---------------------------------------------------------------------------
# Tables and datasets
# ---------------------------------------------------------------------------


def _row_metadata(n: int, task_ids, stages, t_starts):
    ids = tuple(task_ids) if task_ids is not None else tuple(str(i) for i in range(n))
    st = _frozen(stages if stages is not None else np.full(n, -1), np.int64)
    ts = _frozen(t_starts if t_starts is not None else np.zeros(n), np.int64)
    if len(ids) != n or len(st) != n or len(ts) != n:
        raise InvalidInputError("row metadata length does not match the number of rows")
    return ids, st, ts


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """
    S tasks x K named metric-features plus the RTT target.

    Attributes:
        X: (S, K) feature matrix
        columns: Column names "<metric>::<feature>"
        y: (S,) target in ms
        provenance: metric -> its columns, in column order
        task_ids: Task id per row
        stages: Workload stage per row (-1 if unknown)
        t_starts: Submission time per row
    """

    X: np.ndarray
    columns: Tuple[str, ...]
    y: np.ndarray
    provenance: Mapping[str, Tuple[str, ...]] = field(default_factory=dict)
    task_ids: Optional[Tuple[str, ...]] = None
    stages: Optional[np.ndarray] = None
    t_starts: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        X = _frozen(self.X, np.float64)
        y = _frozen(self.y, np.float64)
        columns = tuple(self.columns)
        if X.ndim != 2 or X.shape[1] != len(columns):
            raise InvalidInputError(f"X has shape {X.shape} but there are {len(columns)} columns")
        if y.shape != (X.shape[0],):
            raise InvalidInputError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if len(set(columns)) != len(columns):
            raise InvalidInputError("column names must be unique")
        provenance = dict(self.provenance) or _provenance_from_columns(columns)
        known = set(columns)
        provenance = {
            metric: tuple(c for c in cols if c in known) for metric, cols in provenance.items()
        }
        ids, st, ts = _row_metadata(X.shape[0], self.task_ids, self.stages, self.t_starts)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "provenance", provenance)
        object.__setattr__(self, "task_ids", ids)
        object.__setattr__(self, "stages", st)
        object.__setattr__(self, "t_starts", ts)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def metrics(self) -> List[str]:
        """Metrics that still own at least one column, in provenance order."""
        return [m for m, cols in self.provenance.items() if cols]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def take(self, rows: Sequence[int]) -> "FeatureTable":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            X=self.X[rows],
            y=self.y[rows],
            task_ids=tuple(self.task_ids[i] for i in rows),
            stages=self.stages[rows],
            t_starts=self.t_starts[rows],
        )

    def select_columns(self, names: Iterable[str]) -> "FeatureTable":
        """Keep the named columns, in this table's column order."""
        wanted = set(names)
        missing = wanted - set(self.columns)
        if missing:
            raise InvalidInputError(f"unknown columns: {sorted(missing)}")
        idx = [i for i, c in enumerate(self.columns) if c in wanted]
        return replace(
            self,
            X=self.X[:, idx],
            columns=tuple(self.columns[i] for i in idx),
            provenance={m: tuple(c for c in cols if c in wanted) for m, cols in self.provenance.items()},
        )

    def with_target(self, y: np.ndarray) -> "FeatureTable":
        return replace(self, y=y)


def _provenance_from_columns(columns: Sequence[str]) -> Dict[str, Tuple[str, ...]]:
    grouped: Dict[str, List[str]] = {}
    for name in columns:
        grouped.setdefault(name.split("::", 1)[0], []).append(name)
    return {metric: tuple(cols) for metric, cols in grouped.items()}


@dataclass(frozen=True, eq=False)
class SequenceTable:
    """
    S tasks x T grid steps x M metrics of raw resampled sequences.

    Attributes:
        X: (S, T, M) array, channel order = metrics
        metrics: Metric name per channel
        y: (S,) target in ms
    """

    X: np.ndarray
    metrics: Tuple[str, ...]
    y: np.ndarray
    task_ids: Optional[Tuple[str, ...]] = None
    stages: Optional[np.ndarray] = None
    t_starts: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        X = _frozen(self.X, np.float64)
        y = _frozen(self.y, np.float64)
        metrics = tuple(self.metrics)
        if X.ndim != 3 or X.shape[2] != len(metrics):
            raise InvalidInputError(f"X has shape {X.shape} but there are {len(metrics)} metrics")
        if y.shape != (X.shape[0],):
            raise InvalidInputError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        ids, st, ts = _row_metadata(X.shape[0], self.task_ids, self.stages, self.t_starts)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "metrics", metrics)
        object.__setattr__(self, "task_ids", ids)
        object.__setattr__(self, "stages", st)
        object.__setattr__(self, "t_starts", ts)

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[AlignedSample],
        metrics: Sequence[str],
        stages: Optional[Sequence[int]] = None,
        t_starts: Optional[Sequence[int]] = None,
    ) -> "SequenceTable":
        lengths = {len(s.sequences[m]) for s in samples for m in metrics}
        if len(lengths) > 1:
            raise InvalidInputError(f"samples have unequal sequence lengths {sorted(lengths)}")
        X = np.array([[s.sequences[m] for m in metrics] for s in samples], dtype=np.float64)
        X = X.transpose(0, 2, 1) if len(samples) else np.zeros((0, 0, len(metrics)))
        return cls(
            X=X,
            metrics=tuple(metrics),
            y=np.array([s.target for s in samples], dtype=np.float64),
            task_ids=tuple(s.task_id for s in samples),
            stages=stages,
            t_starts=t_starts,
        )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def columns(self) -> Tuple[str, ...]:
        return self.metrics

    def take(self, rows: Sequence[int]) -> "SequenceTable":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            X=self.X[rows],
            y=self.y[rows],
            task_ids=tuple(self.task_ids[i] for i in rows),
            stages=self.stages[rows],
            t_starts=self.t_starts[rows],
        )

    def with_target(self, y: np.ndarray) -> "SequenceTable":
        return replace(self, y=y)


Table = Union[FeatureTable, SequenceTable]


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    """
    Per-column MinMax parameters fitted on a training partition.

    Columns whose train range is zero map to 0 for every input.
    """

    columns: Tuple[str, ...]
    col_min: np.ndarray
    col_max: np.ndarray
    target_min: float
    target_max: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "col_min", _frozen(self.col_min, np.float64))
        object.__setattr__(self, "col_max", _frozen(self.col_max, np.float64))

    @property
    def target_range(self) -> float:
        return self.target_max - self.target_min

    def transform_X(self, X: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        constant = span == 0
        out = (np.asarray(X, dtype=np.float64) - self.col_min) / np.where(constant, 1.0, span)
        return np.where(constant, 0.0, out)

    def inverse_X(self, X: np.ndarray) -> np.ndarray:
        span = self.col_max - self.col_min
        return np.asarray(X, dtype=np.float64) * span + self.col_min

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        span = self.target_range
        if span == 0:
            return np.zeros_like(np.asarray(y, dtype=np.float64))
        return (np.asarray(y, dtype=np.float64) - self.target_min) / span

    def inverse_y(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.target_range + self.target_min


@dataclass(frozen=True)
class SplitIndices:
    """Row indices of the three partitions."""

    train: Tuple[int, ...]
    validation: Tuple[int, ...]
    test: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Train / validation / test partitions of one table kind.

    Attributes:
        train, validation, test: Partitions (FeatureTable or SequenceTable)
        params: Normalization fitted on train, or None before normalization
    """

    train: Table
    validation: Table
    test: Table
    params: Optional[NormalizationParams] = None

    @classmethod
    def from_indices(cls, table: Table, indices: SplitIndices) -> "Dataset":
        return cls(
            train=table.take(indices.train),
            validation=table.take(indices.validation),
            test=table.take(indices.test),
        )

    @property
    def is_sequential(self) -> bool:
        return isinstance(self.train, SequenceTable)

    @property
    def columns(self) -> Tuple[str, ...]:
        return self.train.columns

    def fingerprint(self) -> str:
        """SHA-256 over partition contents, short form."""
        digest = hashlib.sha256()
        for part in (self.train, self.validation, self.test):
            digest.update(np.ascontiguousarray(part.X).tobytes())
            digest.update(np.ascontiguousarray(part.y).tobytes())
            digest.update("|".join(part.columns).encode())
        return digest.hexdigest()[:16]
