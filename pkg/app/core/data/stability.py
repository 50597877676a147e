"""
Removal of metrics that stay stable across all task windows.
"""

import logging
from typing import Iterable, List, Tuple

import numpy as np

from app.core.data.types import MetricArchive, SeriesKey
from app.core.errors import InsufficientDataError

logger = logging.getLogger(__name__)

STABILITY_TOLERANCE = 1e-12

# (node_id, start_ms, end_ms), end inclusive
Window = Tuple[str, int, int]


def _windowed_mask(timestamps: np.ndarray, windows: List[Tuple[int, int]]) -> np.ndarray:
    """Boolean mask of samples covered by the union of windows."""
    if not windows:
        return np.zeros(len(timestamps), dtype=bool)
    starts = np.array([w[0] for w in windows], dtype=np.int64)
    ends = np.array([w[1] for w in windows], dtype=np.int64)
    lo = np.searchsorted(timestamps, starts, side="left")
    hi = np.searchsorted(timestamps, ends, side="right")
    coverage = np.zeros(len(timestamps) + 1, dtype=np.int64)
    np.add.at(coverage, lo, 1)
    np.add.at(coverage, hi, -1)
    return np.cumsum(coverage[:-1]) > 0


def stable_series(
    archive: MetricArchive, windows: Iterable[Window], tolerance: float = STABILITY_TOLERANCE
) -> List[SeriesKey]:
    """Keys of series whose windowed values have variance below ``tolerance``."""
    per_node = {}
    for node, start, end in windows:
        per_node.setdefault(node, []).append((int(start), int(end)))

    stable = []
    for key, series in archive.series.items():
        mask = _windowed_mask(series.timestamps, per_node.get(key[0], []))
        if not mask.any():
            continue
        if float(np.var(series.values[mask])) < tolerance:
            stable.append(key)
    return stable


def drop_stable_metrics(
    archive: MetricArchive, windows: Iterable[Window], tolerance: float = STABILITY_TOLERANCE
) -> MetricArchive:
    """
    Remove series whose raw values vary by less than ``tolerance`` (absolute
    variance) over all task windows on their node.

    Series without any sample inside a window are kept; a later empty-window
    check decides about them.

    Raises:
        InsufficientDataError: empty archive
    """
    if len(archive) == 0:
        raise InsufficientDataError("cannot check stability of an empty archive")

    dropped = stable_series(archive, windows, tolerance)
    if dropped:
        logger.info("Dropping %d stable metric series of %d", len(dropped), len(archive))
    return archive.without(dropped)
