"""
Single-row inference latency measurement.

Measurements are serialized through a module lock so that concurrent callers
never time predictions against each other.
"""

import threading
import time
from typing import Optional

import numpy as np

from app.core.errors import InvalidInputError
from app.core.models.base import TrainedModel
from app.schemas.reports import InferenceStats

_MEASUREMENT_LOCK = threading.Lock()

DEFAULT_REPETITIONS = 1000
DEFAULT_WARMUP = 100


def measure_inference(
    model: TrainedModel,
    row: Optional[np.ndarray] = None,
    repetitions: int = DEFAULT_REPETITIONS,
    warmup: int = DEFAULT_WARMUP,
) -> InferenceStats:
    """
    Time ``repetitions`` single-row predictions after ``warmup`` discarded calls.

    Args:
        model: Trained model
        row: Normalized input row (default: the model's reference input)
        repetitions: Timed calls
        warmup: Untimed calls before timing

    Returns:
        InferenceStats in microseconds over exactly ``repetitions`` samples
    """
    if repetitions < 1:
        raise InvalidInputError("repetitions must be at least 1")
    if row is None:
        row = model.metadata.reference_input
    if row is None:
        raise InvalidInputError("no input row given and the model has no reference input")
    x = np.asarray(row, dtype=np.float64)
    if tuple(x.shape) != tuple(model.spec.input_shape):
        raise InvalidInputError(f"row shape {x.shape} does not match model input {model.spec.input_shape}")

    predict_one = model.regressor.predict_one
    samples = np.empty(repetitions, dtype=np.float64)
    with _MEASUREMENT_LOCK:
        for _ in range(warmup):
            predict_one(x)
        for i in range(repetitions):
            started = time.perf_counter_ns()
            predict_one(x)
            samples[i] = (time.perf_counter_ns() - started) / 1000.0

    return InferenceStats(
        median_us=float(np.median(samples)),
        p95_us=float(np.percentile(samples, 95)),
        mean_us=float(samples.mean()),
        min_us=float(samples.min()),
        repetitions=repetitions,
    )
