"""
Model specifications, trained-model container and error metrics.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Type

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from app.core.data.types import NormalizationParams
from app.core.errors import ConfigurationError, InvalidInputError


class ModelFamily(str, Enum):
    """Regressor families. MEAN is the no-metrics baseline."""

    LR = "lr"
    RF = "rf"
    GBT = "gbt"
    FNN = "fnn"
    RNN = "rnn"
    CNN = "cnn"
    MEAN = "mean"

    @property
    def is_sequential(self) -> bool:
        return self in (ModelFamily.RNN, ModelFamily.CNN)

    @property
    def is_gradient(self) -> bool:
        return self in (ModelFamily.FNN, ModelFamily.RNN, ModelFamily.CNN)


# ---------------------------------------------------------------------------
# Hyperparameter schemas
# ---------------------------------------------------------------------------


class _Hyperparameters(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _GradientSchedule(_Hyperparameters):
    learning_rate: float = Field(default=1e-2, gt=0)
    batch_size: int = Field(default=32, ge=1)
    max_epochs: int = Field(default=300, ge=1)
    patience: int = Field(default=10, ge=1)


class LinearParams(_Hyperparameters):
    pass


class MeanParams(_Hyperparameters):
    pass


class ForestParams(_Hyperparameters):
    n_trees: int = Field(default=100, ge=1)
    max_depth: Optional[int] = Field(default=None, ge=1)


class BoostingParams(_Hyperparameters):
    n_trees: int = Field(default=100, ge=1)
    max_depth: int = Field(default=3, ge=1)
    learning_rate: float = Field(default=0.1, gt=0, le=1)


class FeedForwardParams(_GradientSchedule):
    hidden_layers: int = Field(default=2, ge=0)
    width: int = Field(default=64, ge=1)


class RecurrentParams(_GradientSchedule):
    hidden_size: int = Field(default=16, ge=1)


class ConvolutionalParams(_GradientSchedule):
    filters: int = Field(default=8, ge=1)
    kernel_size: int = Field(default=3, ge=1)


HYPERPARAMETER_SCHEMAS: Dict[ModelFamily, Type[_Hyperparameters]] = {
    ModelFamily.LR: LinearParams,
    ModelFamily.RF: ForestParams,
    ModelFamily.GBT: BoostingParams,
    ModelFamily.FNN: FeedForwardParams,
    ModelFamily.RNN: RecurrentParams,
    ModelFamily.CNN: ConvolutionalParams,
    ModelFamily.MEAN: MeanParams,
}


class ModelSpec(BaseModel):
    """
    Family, validated hyperparameters, input shape and seed of one model.

    ``input_shape`` is (K,) for tabular families and (T, M) for sequential ones.
    Hyperparameters are completed with the family defaults on construction.
    """

    model_config = ConfigDict(frozen=True)

    family: ModelFamily
    hyperparameters: Dict[str, Any] = Field(default_factory=dict)
    input_shape: Tuple[int, ...] = ()
    seed: int = 0

    @field_validator("hyperparameters")
    @classmethod
    def complete_hyperparameters(cls, v, info: ValidationInfo):
        family = info.data.get("family")
        if family is None:
            return v
        return HYPERPARAMETER_SCHEMAS[family](**v).model_dump()

    @model_validator(mode="after")
    def input_shape_matches_family(self):
        expected = 2 if self.family.is_sequential else 1
        if self.family is not ModelFamily.MEAN and self.input_shape and len(self.input_shape) != expected:
            raise ValueError(
                f"{self.family.value} expects a {expected}-dimensional input shape, got {self.input_shape}"
            )
        return self

    @classmethod
    def build(cls, family, hyperparameters=None, input_shape=(), seed: int = 0) -> "ModelSpec":
        """Construct a spec, turning validation failures into ConfigurationError."""
        try:
            return cls(
                family=ModelFamily(family),
                hyperparameters=dict(hyperparameters or {}),
                input_shape=tuple(input_shape),
                seed=seed,
            )
        except (ValidationError, ValueError) as exc:
            raise ConfigurationError(str(exc), f"model.{family}") from exc

    def params(self):
        """Hyperparameters as the family's schema object."""
        return HYPERPARAMETER_SCHEMAS[self.family](**self.hyperparameters)


# ---------------------------------------------------------------------------
# Trained models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingMetadata:
    """
    Bookkeeping recorded at training time.

    Attributes:
        epochs: Epochs run (trees for ensembles, 1 for closed-form fits)
        train_time_ms: Wall-clock fit time (None once reloaded from disk)
        dataset_fingerprint: Fingerprint of the training dataset
        columns: Input column (or channel) names
        reference_input: One representative normalized input row
        mu_rtt_ms: Mean training target in ms
        validation_rmse: Best validation RMSE seen during training
    """

    epochs: int
    train_time_ms: Optional[float]
    dataset_fingerprint: str
    columns: Tuple[str, ...] = ()
    reference_input: Optional[np.ndarray] = None
    mu_rtt_ms: Optional[float] = None
    validation_rmse: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TrainedModel:
    """
    A fitted regressor with its spec and normalization reference.

    ``regressor`` exposes ``predict_one(x) -> float`` and is never mutated after
    training; updates produce a new TrainedModel.
    """

    spec: ModelSpec
    regressor: Any
    metadata: TrainingMetadata
    params: Optional[NormalizationParams] = None

    @property
    def family(self) -> ModelFamily:
        return self.spec.family


def predict(model: TrainedModel, X) -> np.ndarray:
    """
    Predict normalized targets for a batch of normalized inputs.

    Rows are predicted one at a time, so a batch prediction equals the
    row-by-row predictions exactly.

    Raises:
        InvalidInputError: input shape does not match the model
    """
    X = np.asarray(X, dtype=np.float64)
    shape = model.spec.input_shape
    if X.ndim != len(shape) + 1 or tuple(X.shape[1:]) != tuple(shape):
        raise InvalidInputError(
            f"{model.family.value} model expects rows of shape {shape}, got {X.shape[1:]}"
        )
    predict_one = model.regressor.predict_one
    out = np.fromiter((predict_one(row) for row in X), dtype=np.float64, count=X.shape[0])
    return out


def rmse(y_true, y_pred) -> float:
    """
    Root mean squared error.

    Raises:
        InvalidInputError: length mismatch or empty input
    """
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise InvalidInputError(f"rmse: length mismatch {len(y_true)} vs {len(y_pred)}")
    if y_true.size == 0:
        raise InvalidInputError("rmse needs at least one value")
    residual = y_true - y_pred
    return float(np.sqrt(np.mean(residual * residual)))


def accuracy(rmse_normalized: float) -> float:
    """Accuracy in percent, (1 - normalized RMSE) * 100."""
    return (1.0 - rmse_normalized) * 100.0
