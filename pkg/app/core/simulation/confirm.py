"""
Sample-size criterion for workload stages.

A stage has collected enough tasks once the distribution-free confidence
interval of the median, built from binomial order statistics, lies within
``±r`` of the sample median at confidence ``alpha``.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binom, norm

from app.schemas.scenario import ConfirmParams

MIN_SAMPLES = 5
BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class ConfirmResult:
    """
    Attributes:
        satisfied: Both interval endpoints are within ±r·median of the median
        required_n: Estimated sample count needed to satisfy the criterion
        median: Sample median (nan with fewer than MIN_SAMPLES samples)
        interval: Order-statistic interval of the median, None if unbounded
    """

    satisfied: bool
    required_n: int
    median: float = float("nan")
    interval: Optional[Tuple[float, float]] = None


def median_interval(ordered: np.ndarray, alpha: float) -> Optional[Tuple[float, float]]:
    """
    Order-statistic confidence interval of the median of sorted samples.

    Uses ranks ``l`` and ``n - l + 1`` with ``l`` the (1 - alpha)/2 quantile
    of Binomial(n, 1/2), which covers the median with probability ≥ alpha.
    Returns None when n is too small for any bounded interval.
    """
    n = len(ordered)
    lower_rank = int(binom.ppf((1.0 - alpha) / 2.0, n, 0.5))
    if lower_rank < 1:
        return None
    upper_rank = n - lower_rank + 1
    return float(ordered[lower_rank - 1]), float(ordered[upper_rank - 1])


def _required_n(samples: np.ndarray, median: float, params: ConfirmParams, seed: int) -> int:
    """Bootstrap the median's spread and scale n until the interval fits ±r·median."""
    n = len(samples)
    if median == 0.0:
        return n + 1
    rng = np.random.default_rng(seed)
    resamples = rng.choice(samples, size=(BOOTSTRAP_RESAMPLES, n), replace=True)
    spread = float(np.std(np.median(resamples, axis=1)))
    if spread == 0.0:
        return MIN_SAMPLES
    z = float(norm.ppf((1.0 + params.alpha) / 2.0))
    scaled = n * (z * spread / (params.r * abs(median))) ** 2
    return max(MIN_SAMPLES, int(math.ceil(scaled)))


def confirm_needed(samples: Sequence[float], params: Optional[ConfirmParams] = None, seed: int = 0) -> ConfirmResult:
    """
    Decide whether enough RTT samples were collected.

    Args:
        samples: Observed RTT values
        params: Confidence level and allowed median deviation
        seed: Seed of the bootstrap behind the required-n estimate

    Returns:
        ConfirmResult; fewer than 5 samples give (False, 5)
    """
    params = params or ConfirmParams()
    values = np.asarray(samples, dtype=np.float64)
    if len(values) < MIN_SAMPLES:
        return ConfirmResult(satisfied=False, required_n=MIN_SAMPLES)

    ordered = np.sort(values)
    median = float(np.median(ordered))
    interval = median_interval(ordered, params.alpha)
    tolerance = params.r * abs(median)
    satisfied = (
        interval is not None
        and interval[0] >= median - tolerance
        and interval[1] <= median + tolerance
    )

    required = _required_n(values, median, params, seed)
    if satisfied:
        required = min(required, len(values))
    else:
        required = max(required, len(values) + 1)

    return ConfirmResult(satisfied=satisfied, required_n=required, median=median, interval=interval)
