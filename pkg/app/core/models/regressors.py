"""
Non-gradient regressors: linear regression, random forest, gradient-boosted
trees (scikit-learn estimators) and the mean baseline.

Every regressor predicts one row at a time through ``predict_one``.
"""

import numpy as np
from sklearn.ensemble import GradientBoostingRegressor, RandomForestRegressor
from sklearn.linear_model import LinearRegression


class MeanRegressor:
    """Predicts the training-partition mean for every input."""

    def __init__(self, mean: float) -> None:
        self.mean = float(mean)

    def predict_one(self, x: np.ndarray) -> float:
        return self.mean


class LinearRegressor:
    """Ordinary least squares fitted by scikit-learn."""

    def __init__(self, estimator: LinearRegression) -> None:
        self.estimator = estimator
        self.coef = np.asarray(estimator.coef_, dtype=np.float64).ravel()
        self.intercept = float(estimator.intercept_)

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray) -> "LinearRegressor":
        return cls(LinearRegression().fit(X, y))

    def predict_one(self, x: np.ndarray) -> float:
        return float(np.dot(x, self.coef)) + self.intercept


class TreeEnsembleRegressor:
    """Random forest or gradient-boosted trees behind a single-row interface."""

    def __init__(self, estimator) -> None:
        self.estimator = estimator

    @classmethod
    def fit_forest(
        cls, X: np.ndarray, y: np.ndarray, n_trees: int, max_depth, seed: int
    ) -> "TreeEnsembleRegressor":
        estimator = RandomForestRegressor(
            n_estimators=n_trees, max_depth=max_depth, random_state=seed, n_jobs=1
        )
        return cls(estimator.fit(X, y))

    @classmethod
    def fit_boosting(
        cls, X: np.ndarray, y: np.ndarray, n_trees: int, max_depth: int, learning_rate: float, seed: int
    ) -> "TreeEnsembleRegressor":
        estimator = GradientBoostingRegressor(
            n_estimators=n_trees,
            max_depth=max_depth,
            learning_rate=learning_rate,
            random_state=seed,
        )
        return cls(estimator.fit(X, y))

    def predict_one(self, x: np.ndarray) -> float:
        return float(self.estimator.predict(x[np.newaxis, :])[0])
