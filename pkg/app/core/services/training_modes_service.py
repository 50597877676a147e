"""
Training-mode comparison across workload stages.

Three ways of keeping a predictor current while the co-location changes:
train once on the first stage, retrain from scratch at every stage boundary,
or continue gradient training on each new stage's rows only.
"""

import logging
import time
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.data.preprocessing import DEFAULT_FRACTIONS, normalize_minmax, split_indices
from app.core.data.types import Dataset, SplitIndices, Table
from app.core.errors import InvalidInputError
from app.core.models.base import ModelFamily, TrainedModel, rmse
from app.core.models.search import SearchBudget, hyper_search
from app.core.models.training import online_update, predict_batch
from app.schemas.reports import ModesReport, ModeStageResult, TrainingMode

logger = logging.getLogger(__name__)

DEFAULT_ONLINE_PASSES = 10


def _stage_splits(
    table: Table, stages: List[int], fractions, seed: int
) -> Dict[int, SplitIndices]:
    """Per-stage split, as global row positions."""
    splits = {}
    for stage in stages:
        rows = np.flatnonzero(table.stages == stage)
        local = split_indices(len(rows), fractions, seed + stage)
        splits[stage] = SplitIndices(
            train=tuple(int(rows[i]) for i in local.train),
            validation=tuple(int(rows[i]) for i in local.validation),
            test=tuple(int(rows[i]) for i in local.test),
        )
    return splits


def _fit(
    table: Table,
    train: List[int],
    validation: List[int],
    test: List[int],
    family: ModelFamily,
    budget: SearchBudget,
) -> Tuple[TrainedModel, float]:
    """Normalize on the given training rows and search; returns (model, wall ms)."""
    indices = SplitIndices(train=tuple(train), validation=tuple(validation), test=tuple(test))
    dataset, _ = normalize_minmax(Dataset.from_indices(table, indices))
    started = time.perf_counter()
    model = hyper_search(family, dataset, budget).model
    return model, (time.perf_counter() - started) * 1000.0


def _rmse_ms(model: TrainedModel, table: Table, rows) -> float:
    part = table.take(rows)
    y_hat = model.params.inverse_y(predict_batch(model, model.params.transform_X(part.X)))
    return rmse(part.y, y_hat)


def evaluate_modes(
    table: Table,
    family,
    budget: Optional[SearchBudget] = None,
    fractions=DEFAULT_FRACTIONS,
    seed: int = 0,
    online_passes: int = DEFAULT_ONLINE_PASSES,
) -> ModesReport:
    """
    Per-stage test RMSE of no_retrain, full_retrain and online training.

    Every stage is split on its own; each mode is evaluated on the test rows
    of every stage. RMSE is reported in ms and normalized by the target
    range of the first stage's training rows.

    Args:
        table: Feature or sequence table with workload-stage annotations
        family: Model family (online cells are "unsupported" for non-gradient families)
        budget: Hyperparameter search budget of every (re)training
        fractions: Per-stage train / validation / test fractions
        seed: Split and search seed
        online_passes: Epochs over each new stage's rows

    Raises:
        InvalidInputError: no annotated stage
        InsufficientDataError: a stage has fewer than 10 rows
    """
    family = ModelFamily(family)
    budget = budget or SearchBudget(seed=seed)
    stages = sorted(int(s) for s in np.unique(table.stages) if s >= 0)
    if not stages:
        raise InvalidInputError("table rows carry no workload-stage annotation")

    splits = _stage_splits(table, stages, fractions, seed)
    first = splits[stages[0]]
    reference_range = float(np.ptp(table.y[list(first.train)]))
    scale = reference_range if reference_range > 0 else 1.0

    results: List[ModeStageResult] = []

    def record(stage, mode, model, train_rows, ms):
        test = list(splits[stage].test)
        value = _rmse_ms(model, table, test)
        results.append(
            ModeStageResult(
                stage=stage,
                mode=mode,
                rmse_ms=value,
                rmse_normalized=value / scale,
                train_rows=train_rows,
                test_rows=len(test),
                update_time_ms=ms,
            )
        )

    initial, initial_ms = _fit(table, list(first.train), list(first.validation), list(first.test), family, budget)
    online_model: Optional[TrainedModel] = initial if family.is_gradient else None
    seen_train: List[int] = []
    seen_validation: List[int] = []

    for position, stage in enumerate(stages):
        split = splits[stage]
        seen_train += list(split.train)
        seen_validation += list(split.validation)

        record(stage, TrainingMode.NO_RETRAIN, initial, len(first.train), initial_ms if position == 0 else 0.0)

        if position == 0:
            record(stage, TrainingMode.FULL_RETRAIN, initial, len(seen_train), initial_ms)
        else:
            model, ms = _fit(table, seen_train, seen_validation, list(split.test), family, budget)
            record(stage, TrainingMode.FULL_RETRAIN, model, len(seen_train), ms)

        if online_model is None:
            results.append(
                ModeStageResult(
                    stage=stage,
                    mode=TrainingMode.ONLINE,
                    status="unsupported",
                    reason=f"{family.value} is not trained by gradient descent",
                )
            )
            continue
        if position == 0:
            record(stage, TrainingMode.ONLINE, online_model, len(split.train), initial_ms)
        else:
            new = table.take(list(split.train))
            params = online_model.params
            online_model, ms = online_update(
                online_model, params.transform_X(new.X), params.transform_y(new.y), passes=online_passes
            )
            record(stage, TrainingMode.ONLINE, online_model, len(split.train), ms)

    logger.info(
        "Training modes for %s over %d stages: no_retrain %s, full_retrain %s",
        family.value,
        len(stages),
        [round(r.rmse_normalized, 4) for r in results if r.mode == TrainingMode.NO_RETRAIN],
        [round(r.rmse_normalized, 4) for r in results if r.mode == TrainingMode.FULL_RETRAIN],
    )
    return ModesReport(
        family=family.value,
        stages=stages,
        reference_target_range_ms=reference_range,
        results=results,
    )
