"""
Trained-model containers on disk (joblib).

The container holds the format version, family tag, validated
hyperparameters, the fitted regressor (parameter arrays or estimator),
training metadata and the normalization parameters. Wall-clock training time
is not stored, so equal models give equal bytes.
"""

import logging
from dataclasses import asdict, replace
from pathlib import Path

import joblib

from app.core.data.types import NormalizationParams
from app.core.errors import ConfigurationError, DataIntegrityError
from app.core.models.base import ModelSpec, TrainedModel, TrainingMetadata

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    params = model.params
    container = {
        "format_version": MODEL_FORMAT_VERSION,
        "family": model.family.value,
        "spec": model.spec.model_dump(mode="json"),
        "regressor": model.regressor,
        "metadata": asdict(replace(model.metadata, train_time_ms=None)),
        "params": None
        if params is None
        else {
            "columns": list(params.columns),
            "col_min": params.col_min,
            "col_max": params.col_max,
            "target_min": params.target_min,
            "target_max": params.target_max,
        },
    }
    joblib.dump(container, path)
    logger.info("Saved %s model to %s", model.family.value, path)
    return path


def load_model(path) -> TrainedModel:
    """
    Read a model container.

    Raises:
        ConfigurationError: missing file
        DataIntegrityError: unreadable container or unknown format version
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"file not found: {path}", "model")
    try:
        container = joblib.load(path)
    except Exception as exc:
        raise DataIntegrityError(f"cannot read model container {path}: {exc}") from exc
    if not isinstance(container, dict) or container.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataIntegrityError(f"{path} is not a version {MODEL_FORMAT_VERSION} model container")

    spec = ModelSpec.model_validate(container["spec"])
    metadata = dict(container["metadata"])
    metadata["columns"] = tuple(metadata.get("columns", ()))
    raw_params = container["params"]
    return TrainedModel(
        spec=spec,
        regressor=container["regressor"],
        metadata=TrainingMetadata(**metadata),
        params=None if raw_params is None else NormalizationParams(**raw_params),
    )
