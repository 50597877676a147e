"""
Window slicing and grid alignment of monitoring series.
"""

import math
from typing import List, Mapping, Optional, Sequence

import numpy as np

from app.core.data.types import MetricSeries, Segment, WindowedTask, WindowSpec
from app.core.errors import EmptyWindowError, InvalidInputError


def slice_window(
    series: MetricSeries,
    task: WindowedTask,
    spec: WindowSpec,
    rtt_est: Optional[float] = None,
) -> Segment:
    """
    Cut the samples of one series that fall inside a task's window.

    Pre-submission windows are half-open ``[t_start - t_offset, t_start)``;
    full-task and mid-execution windows include their right endpoint.

    Args:
        series: Metric series of the task's node
        task: The task the window belongs to
        spec: Window length and mode
        rtt_est: RTT estimate in ms, required for mid-execution windows

    Returns:
        Segment, possibly empty

    Raises:
        InvalidInputError: node mismatch, or mid-execution without rtt_est
    """
    if series.node_id != task.node_id:
        raise InvalidInputError(
            f"series {series.metric_name!r} is from node {series.node_id!r}, "
            f"task {task.task_id} ran on {task.node_id!r}"
        )

    start, end, inclusive = spec.bounds(task.t_start, task.t_end, rtt_est)
    ts = series.timestamps
    lo = int(np.searchsorted(ts, start, side="left"))
    hi = int(np.searchsorted(ts, end, side="right" if inclusive else "left"))

    return Segment(
        timestamps=ts[lo:hi],
        values=series.values[lo:hi],
        start_ms=start,
        end_ms=end,
        end_inclusive=inclusive,
    )


def grid_length(start_ms: int, end_ms: int, end_inclusive: bool, period_ms: int) -> int:
    """Number of grid points covering a window."""
    span = end_ms - start_ms
    if end_inclusive:
        return span // period_ms + 1
    return int(math.ceil(span / period_ms))


def resample_to_grid(segment: Segment, period_ms: int = 200) -> np.ndarray:
    """
    Place a segment's samples on the nominal grid anchored at the window start.

    A grid point takes the nearest sample within half a period (ties go to the
    earlier sample). Unmatched points carry the previous grid value forward;
    leading unmatched points take the first matched value.

    Raises:
        EmptyWindowError: segment has no samples
    """
    if segment.is_empty:
        raise EmptyWindowError(
            f"no samples in window [{segment.start_ms}, {segment.end_ms}]"
        )

    n = grid_length(segment.start_ms, segment.end_ms, segment.end_inclusive, period_ms)
    grid = segment.start_ms + period_ms * np.arange(n, dtype=np.int64)
    ts = segment.timestamps
    half = period_ms // 2

    right = np.clip(np.searchsorted(ts, grid, side="left"), 0, len(ts) - 1)
    left = np.clip(right - 1, 0, len(ts) - 1)
    d_left = np.abs(grid - ts[left])
    d_right = np.abs(ts[right] - grid)
    nearest = np.where(d_left <= d_right, left, right)
    matched = np.abs(ts[nearest] - grid) <= half

    if not matched.any():
        return np.full(n, segment.values[0], dtype=np.float64)

    # index of the most recent matched grid point, leading gap -> first match
    carry = np.where(matched, np.arange(n), -1)
    carry = np.maximum.accumulate(carry)
    carry[carry < 0] = int(np.argmax(matched))

    return segment.values[nearest[carry]].astype(np.float64)


def task_sequences(
    series: MetricSeries,
    tasks: Sequence[WindowedTask],
    spec: WindowSpec,
    rtt_estimates: Optional[Mapping[str, float]] = None,
) -> List[np.ndarray]:
    """
    Resampled window sequence of one series for every task.

    Raises:
        EmptyWindowError: a task's window holds no sample (names the task)
    """
    estimates = rtt_estimates or {}
    out = []
    for task in tasks:
        segment = slice_window(series, task, spec, estimates.get(task.task_id))
        if segment.is_empty:
            raise EmptyWindowError(
                f"task {task.task_id}: no {series.metric_name!r} samples in "
                f"[{segment.start_ms}, {segment.end_ms}]"
            )
        out.append(resample_to_grid(segment, spec.period_ms))
    return out
