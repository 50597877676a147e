"""
Pearson product-moment correlation, scalar and matrix forms.

A vector with zero variance correlates 0 with everything.
"""

import numpy as np

from app.core.errors import InvalidInputError


def pearson(x, y) -> float:
    """
    Pearson correlation of two equal-length vectors (two-pass form).

    Raises:
        InvalidInputError: length mismatch or fewer than 2 values
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise InvalidInputError(f"pearson: length mismatch {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise InvalidInputError("pearson needs at least 2 values")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0

    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.dot(xc, yc) / denom, -1.0, 1.0))


def _centered_unit_columns(X: np.ndarray) -> np.ndarray:
    """Centered columns scaled to unit norm; constant columns become zero."""
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0, keepdims=True)
    norms = np.sqrt(np.einsum("sk,sk->k", Xc, Xc))
    constant = (np.ptp(X, axis=0) == 0) | (norms == 0)
    return np.where(constant, 0.0, Xc / np.where(constant, 1.0, norms))


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    """(K, K) Pearson matrix of the columns of an (S, K) matrix."""
    if X.shape[0] < 2:
        raise InvalidInputError("correlation needs at least 2 rows")
    U = _centered_unit_columns(X)
    return np.clip(U.T @ U, -1.0, 1.0)


def target_correlations(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pearson correlation of every column of X with y."""
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] != len(y):
        raise InvalidInputError(f"{X.shape[0]} rows but {len(y)} targets")
    if len(y) < 2:
        raise InvalidInputError("correlation needs at least 2 rows")
    U = _centered_unit_columns(X)
    u = _centered_unit_columns(y[:, np.newaxis])[:, 0]
    return np.clip(U.T @ u, -1.0, 1.0)
