"""
Training, scoring and online updates of every model family.
"""

import logging
import time
from dataclasses import replace
from typing import Tuple

import numpy as np

from app.core.data.types import Dataset
from app.core.errors import InsufficientDataError, InvalidInputError, UnsupportedOperationError
from app.core.models.base import (
    ModelFamily,
    ModelSpec,
    TrainedModel,
    TrainingMetadata,
    predict,
    rmse,
)
from app.core.models.neural import (
    NetworkRegressor,
    gradient_passes,
    init_cnn,
    init_fnn,
    init_rnn,
    train_network,
)
from app.core.models.regressors import LinearRegressor, MeanRegressor, TreeEnsembleRegressor

logger = logging.getLogger(__name__)


def _check_dataset(spec: ModelSpec, dataset: Dataset) -> Tuple[int, ...]:
    if dataset.train.n_rows == 0:
        raise InsufficientDataError("training partition is empty")
    if spec.family.is_sequential != dataset.is_sequential and spec.family is not ModelFamily.MEAN:
        kind = "sequence" if spec.family.is_sequential else "feature"
        raise InvalidInputError(f"{spec.family.value} models need a {kind} dataset")
    shape = tuple(dataset.train.X.shape[1:])
    if spec.input_shape and tuple(spec.input_shape) != shape:
        raise InvalidInputError(f"spec input shape {spec.input_shape} does not match data {shape}")
    return shape


def _fit(spec: ModelSpec, dataset: Dataset, shape: Tuple[int, ...]):
    """Returns (regressor, epochs)."""
    hp = spec.params()
    X, y = dataset.train.X, dataset.train.y
    family = spec.family

    if family is ModelFamily.MEAN:
        return MeanRegressor(float(np.mean(y))), 1
    if family is ModelFamily.LR:
        return LinearRegressor.fit(X, y), 1
    if family is ModelFamily.RF:
        return TreeEnsembleRegressor.fit_forest(X, y, hp.n_trees, hp.max_depth, spec.seed), hp.n_trees
    if family is ModelFamily.GBT:
        regressor = TreeEnsembleRegressor.fit_boosting(
            X, y, hp.n_trees, hp.max_depth, hp.learning_rate, spec.seed
        )
        return regressor, hp.n_trees

    rng = np.random.default_rng(spec.seed)
    if family is ModelFamily.FNN:
        params = init_fnn(shape[0], hp.hidden_layers, hp.width, rng)
    elif family is ModelFamily.RNN:
        params = init_rnn(shape[1], hp.hidden_size, rng)
    else:
        if shape[0] < hp.kernel_size:
            raise InvalidInputError(f"sequence length {shape[0]} is shorter than kernel {hp.kernel_size}")
        params = init_cnn(shape[1], hp.filters, hp.kernel_size, rng)

    best, epochs, _ = train_network(
        family.value,
        params,
        X,
        y,
        dataset.validation.X,
        dataset.validation.y,
        hp.learning_rate,
        hp.batch_size,
        hp.max_epochs,
        hp.patience,
        rng,
    )
    return NetworkRegressor(family.value, best), epochs


def predict_batch(model: TrainedModel, X) -> np.ndarray:
    """Vectorized prediction used for scoring partitions."""
    X = np.asarray(X, dtype=np.float64)
    regressor = model.regressor
    if X.shape[0] == 0:
        return np.zeros(0)
    if isinstance(regressor, NetworkRegressor):
        return regressor.predict_batch(X)
    if isinstance(regressor, TreeEnsembleRegressor):
        return regressor.estimator.predict(X)
    return predict(model, X)


def score(model: TrainedModel, X, y) -> float:
    """RMSE of a model on one partition (normalized units)."""
    return rmse(y, predict_batch(model, X))


def train(spec: ModelSpec, dataset: Dataset) -> TrainedModel:
    """
    Fit one model on the training partition.

    Gradient families early-stop on validation RMSE (patience from the
    hyperparameters) and keep the best epoch.

    Raises:
        TrainingDivergedError: non-finite loss (carries the epoch)
        InvalidInputError: data shape does not fit the family or the spec
    """
    shape = _check_dataset(spec, dataset)
    if not spec.input_shape:
        spec = spec.model_copy(update={"input_shape": shape})

    started = time.perf_counter()
    regressor, epochs = _fit(spec, dataset, shape)
    train_time_ms = (time.perf_counter() - started) * 1000.0

    model = TrainedModel(
        spec=spec,
        regressor=regressor,
        metadata=TrainingMetadata(
            epochs=epochs,
            train_time_ms=train_time_ms,
            dataset_fingerprint=dataset.fingerprint(),
            columns=tuple(dataset.columns),
            reference_input=np.array(dataset.train.X[0], copy=True),
            mu_rtt_ms=_mu_rtt_ms(dataset),
        ),
        params=dataset.params,
    )
    if dataset.validation.n_rows:
        validation_rmse = score(model, dataset.validation.X, dataset.validation.y)
        model = replace(model, metadata=replace(model.metadata, validation_rmse=validation_rmse))
    logger.debug(
        "Trained %s %s in %.1f ms (%d epochs)",
        spec.family.value,
        spec.hyperparameters,
        train_time_ms,
        epochs,
    )
    return model


def _mu_rtt_ms(dataset: Dataset) -> float:
    y = dataset.train.y
    if dataset.params is not None:
        y = dataset.params.inverse_y(y)
    return float(np.mean(y))


def baseline_mean(dataset: Dataset) -> TrainedModel:
    """The no-metrics baseline: always predicts the training mean target."""
    return train(ModelSpec(family=ModelFamily.MEAN), dataset)


def online_update(model: TrainedModel, X, y, passes: int = 1) -> Tuple[TrainedModel, float]:
    """
    Continue gradient training on new rows only.

    Args:
        model: Gradient-trained model
        X, y: New rows, normalized with the model's parameters
        passes: Epochs over the new rows

    Returns:
        (updated model, update time in ms); the input model is not modified

    Raises:
        UnsupportedOperationError: the family is not gradient-trained
    """
    if not model.family.is_gradient:
        raise UnsupportedOperationError(f"{model.family.value} models cannot be updated online")
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.shape[0] == 0:
        return model, 0.0
    if tuple(X.shape[1:]) != tuple(model.spec.input_shape) or len(y) != X.shape[0]:
        raise InvalidInputError(
            f"update rows of shape {X.shape} do not fit input shape {model.spec.input_shape}"
        )

    hp = model.spec.params()
    updates = int(model.metadata.extra.get("online_updates", 0)) + 1
    rng = np.random.default_rng([model.spec.seed, updates])

    started = time.perf_counter()
    params = gradient_passes(
        model.family.value,
        model.regressor.params,
        X,
        y,
        hp.learning_rate,
        hp.batch_size,
        rng,
        passes=passes,
        epoch_offset=model.metadata.epochs,
    )
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    metadata = replace(
        model.metadata,
        epochs=model.metadata.epochs + passes,
        extra={**model.metadata.extra, "online_updates": updates},
    )
    return replace(model, regressor=NetworkRegressor(model.family.value, params), metadata=metadata), elapsed_ms
