"""
Unit tests for training, scoring and online updates.
"""
import numpy as np
import pytest

from app.core.data.preprocessing import normalize_minmax, split
from app.core.data.types import Dataset, FeatureTable
from app.core.errors import InvalidInputError, UnsupportedOperationError
from app.core.models.base import ModelSpec, predict
from app.core.models.training import baseline_mean, online_update, predict_batch, score, train


def _linear_dataset(rows: int = 120, seed: int = 0):
    rng = np.random.default_rng(seed)
    X = rng.random((rows, 3))
    y = 200.0 * X[:, 0] - 50.0 * X[:, 1] + 100.0
    table = FeatureTable(X=X, columns=("cpu::mean", "mem::mean", "disk::mean"), y=y)
    dataset, _ = normalize_minmax(split(table, seed=seed))
    return dataset


class TestTrain:
    """Test suite for train()."""

    @pytest.fixture
    def dataset(self):
        return _linear_dataset()

    @pytest.mark.unit
    def test_linear_regression_recovers_exact_relation(self, dataset):
        """
        Test LR on a noiseless linear target.

        Expected behavior:
        - Test RMSE is zero up to rounding
        - The spec picks up the input shape of the data
        """
        # Act
        model = train(ModelSpec.build("lr"), dataset)

        # Assert
        assert score(model, dataset.test.X, dataset.test.y) < 1e-9
        assert model.spec.input_shape == (3,)
        assert model.metadata.columns == ("cpu::mean", "mem::mean", "disk::mean")

    @pytest.mark.unit
    def test_metadata_records_training_context(self, dataset):
        model = train(ModelSpec.build("rf", {"n_trees": 10}), dataset)

        assert model.metadata.epochs == 10
        assert model.metadata.dataset_fingerprint == dataset.fingerprint()
        assert model.metadata.reference_input.shape == (3,)
        assert model.metadata.validation_rmse is not None
        assert model.metadata.mu_rtt_ms == pytest.approx(float(np.mean(dataset.params.inverse_y(dataset.train.y))))

    @pytest.mark.unit
    def test_baseline_predicts_train_mean(self, dataset):
        model = baseline_mean(dataset)

        out = predict(model, dataset.test.X)

        np.testing.assert_allclose(out, np.full(len(out), np.mean(dataset.train.y)))

    @pytest.mark.unit
    def test_feedforward_beats_baseline(self, dataset):
        """
        Test a small network on a learnable target.

        Expected behavior:
        - Lower test RMSE than the mean baseline
        """
        spec = ModelSpec.build(
            "fnn", {"hidden_layers": 1, "width": 16, "learning_rate": 0.05, "max_epochs": 200}, seed=1
        )

        model = train(spec, dataset)

        baseline = baseline_mean(dataset)
        assert score(model, dataset.test.X, dataset.test.y) < score(baseline, dataset.test.X, dataset.test.y)

    @pytest.mark.unit
    def test_sequence_family_rejects_feature_data(self, dataset):
        with pytest.raises(InvalidInputError):
            train(ModelSpec.build("rnn"), dataset)

    @pytest.mark.unit
    def test_batch_and_single_row_predictions_agree(self, dataset):
        model = train(ModelSpec.build("gbt", {"n_trees": 20}), dataset)

        np.testing.assert_allclose(predict(model, dataset.test.X), predict_batch(model, dataset.test.X))

    @pytest.mark.unit
    def test_wrong_row_shape_rejected(self, dataset):
        model = train(ModelSpec.build("lr"), dataset)

        with pytest.raises(InvalidInputError):
            predict(model, np.zeros((2, 4)))


class TestOnlineUpdate:
    """Test suite for online_update()."""

    @pytest.mark.unit
    def test_non_gradient_family_rejected(self):
        dataset = _linear_dataset()
        model = train(ModelSpec.build("lr"), dataset)

        with pytest.raises(UnsupportedOperationError):
            online_update(model, dataset.test.X, dataset.test.y)

    @pytest.mark.unit
    def test_update_returns_new_model(self):
        """
        Test one online update of a feedforward network.

        Expected behavior:
        - Epochs grow by the number of passes
        - The input model keeps its parameters
        - A non-negative update time is reported
        """
        # Arrange
        dataset = _linear_dataset()
        model = train(ModelSpec.build("fnn", {"hidden_layers": 1, "width": 8, "max_epochs": 5}), dataset)
        before = {k: v.copy() for k, v in model.regressor.params.items()}

        # Act
        updated, elapsed_ms = online_update(model, dataset.test.X, dataset.test.y, passes=3)

        # Assert
        assert updated.metadata.epochs == model.metadata.epochs + 3
        assert updated.metadata.extra["online_updates"] == 1
        assert elapsed_ms >= 0.0
        for name, value in model.regressor.params.items():
            np.testing.assert_array_equal(value, before[name])
        assert not np.array_equal(updated.regressor.params["W0"], before["W0"])


class TestFitInvariants:
    """Test suite for properties every fit must have."""

    @pytest.mark.unit
    def test_linear_regression_ignores_row_order(self):
        """
        Test LR on a noisy target before and after shuffling the training rows.

        Expected behavior:
        - Test predictions agree to rounding
        """
        # Arrange
        rng = np.random.default_rng(8)
        X = rng.random((150, 3))
        y = 40.0 + 25.0 * X[:, 0] + 10.0 * X[:, 2] + rng.normal(scale=2.0, size=150)
        dataset, _ = normalize_minmax(split(FeatureTable(X=X, columns=("a::mean", "b::mean", "c::mean"), y=y)))
        order = rng.permutation(dataset.train.n_rows)
        shuffled = Dataset(
            train=dataset.train.take(order),
            validation=dataset.validation,
            test=dataset.test,
            params=dataset.params,
        )

        # Act
        original = predict_batch(train(ModelSpec.build("lr"), dataset), dataset.test.X)
        reordered = predict_batch(train(ModelSpec.build("lr"), shuffled), dataset.test.X)

        # Assert
        np.testing.assert_allclose(reordered, original, atol=1e-9)

    @pytest.mark.unit
    @pytest.mark.parametrize("family", ["rf", "gbt"])
    def test_trees_fit_a_step_function(self, family):
        """
        Test tree ensembles on a target that jumps at x = 0.5.

        Expected behavior:
        - Normalized training RMSE stays below 0.05
        """
        rng = np.random.default_rng(2)
        x = rng.random(500)
        y = np.where(x > 0.5, 180.0, 100.0)
        dataset, _ = normalize_minmax(split(FeatureTable(X=x[:, None], columns=("cpu::mean",), y=y)))

        model = train(ModelSpec.build(family), dataset)

        assert score(model, dataset.train.X, dataset.train.y) < 0.05


class TestOnlineUpdateAfterDrift:
    """Online updates on rows drawn after the target relation changed."""

    @staticmethod
    def _drifted_errors(seed: int):
        rng = np.random.default_rng(seed)
        columns = ("cpu::mean", "net::mean")
        X_before = rng.random((120, 2))
        y_before = 100.0 + 200.0 * X_before[:, 0]
        X_after = rng.random((150, 2))
        y_after = 100.0 + 200.0 * X_after[:, 0] + 150.0 * X_after[:, 1]

        dataset, params = normalize_minmax(split(FeatureTable(X=X_before, columns=columns, y=y_before), seed=seed))
        hyperparameters = {"hidden_layers": 1, "width": 8, "max_epochs": 50, "learning_rate": 0.05}
        spec = ModelSpec.build("fnn", hyperparameters, seed=seed)
        frozen = train(spec, dataset)

        X_new, y_new = params.transform_X(X_after), params.transform_y(y_after)
        updated, _ = online_update(frozen, X_new[:100], y_new[:100], passes=30)
        return score(frozen, X_new[100:], y_new[100:]), score(updated, X_new[100:], y_new[100:])

    @pytest.mark.unit
    def test_updated_network_beats_frozen_one(self):
        """
        Test 10 seeds of a target that gains a second cause.

        Expected behavior:
        - Median RMSE on the new relation is lower after the online update
        """
        # Act
        errors = [self._drifted_errors(seed) for seed in range(10)]

        # Assert
        frozen = np.median([e[0] for e in errors])
        updated = np.median([e[1] for e in errors])
        assert updated < frozen
