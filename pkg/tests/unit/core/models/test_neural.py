"""
Gradient checks and training-loop tests for the numpy networks.
"""
import numpy as np
import pytest

from app.core.errors import TrainingDivergedError
from app.core.models.neural import (
    NetworkRegressor,
    gradient_passes,
    init_cnn,
    init_fnn,
    init_rnn,
    loss_and_gradients,
)


def _numeric_gradients(kind, params, X, y, eps=1e-6):
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            plus = {k: v.copy() for k, v in params.items()}
            minus = {k: v.copy() for k, v in params.items()}
            plus[name][idx] += eps
            minus[name][idx] -= eps
            g[idx] = (
                loss_and_gradients(kind, plus, X, y)[0] - loss_and_gradients(kind, minus, X, y)[0]
            ) / (2 * eps)
        grads[name] = g
    return grads


def _relative_error(analytic, numeric) -> float:
    a = np.concatenate([analytic[k].ravel() for k in sorted(analytic)])
    n = np.concatenate([numeric[k].ravel() for k in sorted(analytic)])
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), 1e-12))


def _problem(kind: str, seed: int):
    rng = np.random.default_rng(seed)
    if kind == "fnn":
        params = init_fnn(3, 2, 4, rng)
        X = rng.normal(size=(6, 3))
    elif kind == "rnn":
        params = init_rnn(2, 3, rng)
        X = rng.normal(size=(5, 4, 2))
    else:
        params = init_cnn(2, 3, 2, rng)
        X = rng.normal(size=(5, 5, 2))
    # move biases off zero
    params = {k: v + 0.1 * rng.normal(size=v.shape) for k, v in params.items()}
    y = rng.normal(size=X.shape[0])
    return params, X, y


class TestGradients:
    """Analytic gradients against central finite differences."""

    @pytest.mark.unit
    @pytest.mark.parametrize("kind", ["fnn", "rnn", "cnn"])
    @pytest.mark.parametrize("seed", range(20))
    def test_analytic_matches_finite_differences(self, kind, seed):
        """
        Test backpropagation of every network kind.

        Expected behavior:
        - Norm-based relative error below 1e-5
        - Every parameter has a gradient of its own shape
        """
        # Arrange
        params, X, y = _problem(kind, seed)

        # Act
        _, analytic = loss_and_gradients(kind, params, X, y)
        numeric = _numeric_gradients(kind, params, X, y)

        # Assert
        assert set(analytic) == set(params)
        for name in params:
            assert analytic[name].shape == params[name].shape
        assert _relative_error(analytic, numeric) < 1e-5


class TestGradientPasses:
    """Test suite for gradient_passes()."""

    @pytest.mark.unit
    def test_input_parameters_are_not_modified(self):
        params, X, y = _problem("fnn", 0)
        before = {k: v.copy() for k, v in params.items()}

        gradient_passes("fnn", params, X, y, 0.01, 4, np.random.default_rng(0))

        for name in params:
            np.testing.assert_array_equal(params[name], before[name])

    @pytest.mark.unit
    def test_loss_decreases_on_fixed_batch(self):
        params, X, y = _problem("rnn", 3)
        start = loss_and_gradients("rnn", params, X, y)[0]

        trained = gradient_passes("rnn", params, X, y, 0.05, 5, np.random.default_rng(0), passes=50)

        assert loss_and_gradients("rnn", trained, X, y)[0] < start

    @pytest.mark.unit
    def test_divergence_reports_epoch(self):
        """
        Test a learning rate large enough to overflow the weights.

        Expected behavior:
        - TrainingDivergedError carrying a positive epoch
        """
        params, X, y = _problem("fnn", 1)

        with pytest.raises(TrainingDivergedError) as exc_info:
            with np.errstate(all="ignore"):
                gradient_passes("fnn", params, X, y, 1e12, 2, np.random.default_rng(0), passes=50)

        assert exc_info.value.epoch >= 1


class TestNetworkRegressor:
    """Test suite for NetworkRegressor."""

    @pytest.mark.unit
    def test_single_row_matches_batch(self):
        params, X, _ = _problem("cnn", 2)
        regressor = NetworkRegressor("cnn", params)

        batch = regressor.predict_batch(X)

        assert [regressor.predict_one(row) for row in X] == pytest.approx(batch.tolist(), abs=1e-12)

    @pytest.mark.unit
    def test_parameters_are_read_only(self):
        params, _, _ = _problem("fnn", 2)
        regressor = NetworkRegressor("fnn", params)

        with pytest.raises(ValueError):
            regressor.params["W0"][0, 0] = 1.0
