"""
Statistical and temporal feature catalog.

Every feature is a vectorized function over an (S, T) matrix of resampled
window sequences (one row per task) returning one value per row. Undefined
values (autocorrelation or trend fit of a constant row) are 0.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from app.core.errors import ConfigurationError

CATALOG_VERSION = "v1"

FeatureFn = Callable[[np.ndarray], np.ndarray]

# relative variance floor below which a row counts as constant
_DEGENERATE_REL = 1e-20


def _centered(V: np.ndarray) -> np.ndarray:
    return V - V.mean(axis=1, keepdims=True)


def _degenerate(V: np.ndarray, sum_sq: np.ndarray) -> np.ndarray:
    m = V.mean(axis=1)
    return sum_sq / V.shape[1] <= _DEGENERATE_REL * (1.0 + m * m)


def _mean_sign(V: np.ndarray) -> np.ndarray:
    """-1 / 0 / +1 per element relative to the row mean, with a float-noise band."""
    c = _centered(V)
    band = 1e-12 * (1.0 + np.abs(V.mean(axis=1, keepdims=True)))
    return np.where(c > band, 1, np.where(c < -band, -1, 0))


def _longest_run(mask: np.ndarray) -> np.ndarray:
    run = np.zeros(mask.shape[0], dtype=np.int64)
    best = np.zeros(mask.shape[0], dtype=np.int64)
    for t in range(mask.shape[1]):
        run = np.where(mask[:, t], run + 1, 0)
        best = np.maximum(best, run)
    return best.astype(np.float64)


def _diffs(V: np.ndarray) -> np.ndarray:
    return np.diff(V, axis=1)


def _mean_or_zero(D: np.ndarray) -> np.ndarray:
    if D.shape[1] == 0:
        return np.zeros(D.shape[0])
    return D.mean(axis=1)


# -- distribution ------------------------------------------------------------


def ft_count(V):
    return np.full(V.shape[0], float(V.shape[1]))


def ft_mean(V):
    return V.mean(axis=1)


def ft_std(V):
    return V.std(axis=1)


def ft_variance(V):
    return V.var(axis=1)


def ft_min(V):
    return V.min(axis=1)


def ft_max(V):
    return V.max(axis=1)


def ft_range(V):
    return V.max(axis=1) - V.min(axis=1)


def ft_median(V):
    return np.median(V, axis=1)


def _quantile(q: float) -> FeatureFn:
    def ft_quantile(V):
        return np.quantile(V, q, axis=1)

    return ft_quantile


def ft_sum(V):
    return V.sum(axis=1)


def ft_abs_energy(V):
    return np.einsum("st,st->s", V, V)


# -- change ------------------------------------------------------------------


def ft_mean_abs_change(V):
    return _mean_or_zero(np.abs(_diffs(V)))


def ft_mean_change(V):
    return _mean_or_zero(_diffs(V))


def ft_abs_sum_of_changes(V):
    return np.abs(_diffs(V)).sum(axis=1)


# -- position relative to the mean ------------------------------------------


def ft_count_above_mean(V):
    return (_mean_sign(V) > 0).sum(axis=1).astype(np.float64)


def ft_count_below_mean(V):
    return (_mean_sign(V) < 0).sum(axis=1).astype(np.float64)


def ft_longest_strike_above_mean(V):
    return _longest_run(_mean_sign(V) > 0)


def ft_longest_strike_below_mean(V):
    return _longest_run(_mean_sign(V) < 0)


def ft_number_mean_crossings(V):
    above = _mean_sign(V) > 0
    return (above[:, 1:] != above[:, :-1]).sum(axis=1).astype(np.float64)


def ft_first_index_max(V):
    return V.argmax(axis=1) / V.shape[1]


def ft_last_index_min(V):
    T = V.shape[1]
    return (T - 1 - V[:, ::-1].argmin(axis=1)) / T


# -- temporal ----------------------------------------------------------------


def _autocorrelation(lag: int) -> FeatureFn:
    def ft_autocorrelation(V):
        c = _centered(V)
        denom = np.einsum("st,st->s", c, c)
        shifted = np.roll(c, -lag, axis=1)
        num = np.einsum("st,st->s", c, shifted)
        flat = _degenerate(V, denom)
        return np.where(flat, 0.0, num / np.where(flat, 1.0, denom))

    return ft_autocorrelation


def _trend(V: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Least-squares slope, intercept and R^2 against the step index."""
    S, T = V.shape
    x = np.arange(T, dtype=np.float64)
    x_c = x - x.mean()
    sxx = float(x_c @ x_c)
    c = _centered(V)
    svv = np.einsum("st,st->s", c, c)
    if sxx == 0.0:
        slope = np.zeros(S)
    else:
        slope = (c @ x_c) / sxx
    intercept = V.mean(axis=1) - slope * x.mean()
    flat = _degenerate(V, svv)
    r2 = np.where(flat, 0.0, slope * slope * sxx / np.where(flat, 1.0, svv))
    return slope, intercept, np.clip(r2, 0.0, 1.0)


def ft_linear_trend_slope(V):
    return _trend(V)[0]


def ft_linear_trend_intercept(V):
    return _trend(V)[1]


def ft_linear_trend_r2(V):
    return _trend(V)[2]


@dataclass(frozen=True)
class FeatureDefinition:
    """A named feature computed over a window sequence."""

    name: str
    fn: FeatureFn


@dataclass(frozen=True)
class FeatureCatalog:
    """
    Ordered, versioned list of feature definitions.

    The order is the column order of every feature block built with it.
    """

    version: str
    definitions: Tuple[FeatureDefinition, ...]

    def __post_init__(self) -> None:
        names = [d.name for d in self.definitions]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if "::" in "".join(names):
            raise ValueError("feature names must not contain '::'")

    def __len__(self) -> int:
        return len(self.definitions)

    @property
    def names(self) -> List[str]:
        return [d.name for d in self.definitions]

    def column_names(self, metric: str) -> List[str]:
        return [f"{metric}::{d.name}" for d in self.definitions]

    def evaluate(self, V: np.ndarray) -> np.ndarray:
        """Evaluate all features on an (S, T) matrix -> (S, F)."""
        V = np.asarray(V, dtype=np.float64)
        with np.errstate(all="ignore"):
            cols = [np.asarray(d.fn(V), dtype=np.float64) for d in self.definitions]
        return np.column_stack(cols) if cols else np.zeros((V.shape[0], 0))


_DEFAULT_FEATURES: Dict[str, FeatureFn] = {
    "count": ft_count,
    "mean": ft_mean,
    "std": ft_std,
    "variance": ft_variance,
    "min": ft_min,
    "max": ft_max,
    "range": ft_range,
    "median": ft_median,
    "quantile_0.1": _quantile(0.1),
    "quantile_0.25": _quantile(0.25),
    "quantile_0.75": _quantile(0.75),
    "quantile_0.9": _quantile(0.9),
    "sum": ft_sum,
    "abs_energy": ft_abs_energy,
    "mean_abs_change": ft_mean_abs_change,
    "mean_change": ft_mean_change,
    "abs_sum_of_changes": ft_abs_sum_of_changes,
    "count_above_mean": ft_count_above_mean,
    "count_below_mean": ft_count_below_mean,
    "longest_strike_above_mean": ft_longest_strike_above_mean,
    "longest_strike_below_mean": ft_longest_strike_below_mean,
    "number_mean_crossings": ft_number_mean_crossings,
    "first_index_max": ft_first_index_max,
    "last_index_min": ft_last_index_min,
    "autocorrelation_lag_1": _autocorrelation(1),
    "autocorrelation_lag_2": _autocorrelation(2),
    "autocorrelation_lag_5": _autocorrelation(5),
    "linear_trend_slope": ft_linear_trend_slope,
    "linear_trend_intercept": ft_linear_trend_intercept,
    "linear_trend_r2": ft_linear_trend_r2,
}

DEFAULT_CATALOG = FeatureCatalog(
    version=CATALOG_VERSION,
    definitions=tuple(FeatureDefinition(name, fn) for name, fn in _DEFAULT_FEATURES.items()),
)


def get_catalog(version: str = CATALOG_VERSION) -> FeatureCatalog:
    if version != CATALOG_VERSION:
        raise ConfigurationError(f"unknown feature catalog version {version!r}", "catalog")
    return DEFAULT_CATALOG
