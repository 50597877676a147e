"""
Seeded grid / random hyperparameter search selected on validation RMSE.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.config.settings import get_settings
from app.core.data.types import Dataset
from app.core.errors import InvalidInputError, PerfOracleError, SearchFailedError
from app.core.models.base import ModelFamily, ModelSpec, TrainedModel
from app.core.models.training import score, train

logger = logging.getLogger(__name__)

Grid = Dict[str, List[Any]]

DEFAULT_GRIDS: Dict[ModelFamily, Grid] = {
    ModelFamily.LR: {},
    ModelFamily.MEAN: {},
    ModelFamily.FNN: {
        "hidden_layers": [1, 2, 3],
        "width": [16, 64, 128],
        "learning_rate": [1e-2, 1e-3],
    },
    ModelFamily.RF: {"n_trees": [50, 200], "max_depth": [4, 8, None]},
    ModelFamily.GBT: {
        "n_trees": [100, 300],
        "max_depth": [2, 4],
        "learning_rate": [0.05, 0.1],
    },
    ModelFamily.RNN: {"hidden_size": [8, 16, 32], "learning_rate": [1e-2, 1e-3]},
    ModelFamily.CNN: {
        "filters": [8, 16],
        "kernel_size": [3, 5],
        "learning_rate": [1e-2, 1e-3],
    },
}


class SearchBudget(BaseModel):
    """
    Search space and limits.

    Attributes:
        max_candidates: Upper bound on trials per family (seeded random subset), None = full grid
        grids: Per-family overrides of the default grids
        seed: Seed for subset sampling and model initialisation
    """

    max_candidates: Optional[int] = Field(default=None, ge=1)
    grids: Dict[ModelFamily, Grid] = Field(default_factory=dict)
    seed: int = 0

    def grid_for(self, family: ModelFamily) -> Grid:
        return self.grids.get(family, DEFAULT_GRIDS[family])

    def configurations(self, family: ModelFamily) -> List[Dict[str, Any]]:
        """Grid points in deterministic order, subsampled if over budget."""
        grid = self.grid_for(family)
        names = list(grid)
        for name in names:
            if not grid[name]:
                raise InvalidInputError(f"empty grid axis {name!r} for {family.value}")
        points = [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]
        if self.max_candidates is not None and len(points) > self.max_candidates:
            rng = np.random.default_rng(self.seed)
            chosen = np.sort(rng.choice(len(points), size=self.max_candidates, replace=False))
            points = [points[i] for i in chosen]
        return points


@dataclass(frozen=True)
class Trial:
    """One evaluated configuration."""

    hyperparameters: Dict[str, Any]
    validation_rmse: Optional[float]
    status: str
    reason: Optional[str] = None


@dataclass(frozen=True)
class SearchOutcome:
    """Best configuration of a search plus every trial."""

    spec: ModelSpec
    model: TrainedModel
    trials: Tuple[Trial, ...]


def _run_trial(spec: ModelSpec, dataset: Dataset):
    try:
        model = train(spec, dataset)
        partition = dataset.validation if dataset.validation.n_rows else dataset.train
        value = score(model, partition.X, partition.y)
        if not np.isfinite(value):
            return None, Trial(spec.hyperparameters, None, "failed", "non-finite validation RMSE")
        return model, Trial(spec.hyperparameters, value, "ok")
    except (PerfOracleError, ValueError, FloatingPointError) as exc:
        return None, Trial(spec.hyperparameters, None, "failed", str(exc))


def hyper_search(
    family, dataset: Dataset, budget: Optional[SearchBudget] = None
) -> SearchOutcome:
    """
    Train every configuration of the family's grid and keep the one with the
    lowest validation RMSE (ties go to the earlier configuration).

    Trials run concurrently; their order in the outcome is the grid order.

    Raises:
        SearchFailedError: every trial failed
    """
    budget = budget or SearchBudget()
    family = ModelFamily(family)
    shape = tuple(dataset.train.X.shape[1:])
    specs = [
        ModelSpec.build(family, hp, shape, budget.seed) for hp in budget.configurations(family)
    ]

    workers = min(get_settings().THREADS, len(specs))
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        results = list(pool.map(lambda s: _run_trial(s, dataset), specs))

    trials = tuple(trial for _, trial in results)
    best_index = None
    for index, (model, trial) in enumerate(results):
        if model is None:
            continue
        if best_index is None or trial.validation_rmse < trials[best_index].validation_rmse:
            best_index = index

    failed = sum(1 for t in trials if t.status != "ok")
    if failed:
        logger.warning("%d of %d %s trials failed", failed, len(trials), family.value)
    if best_index is None:
        raise SearchFailedError(f"all {len(trials)} {family.value} trials failed")

    logger.debug(
        "%s search: %d trials, best %s (validation RMSE %.6f)",
        family.value,
        len(trials),
        specs[best_index].hyperparameters,
        trials[best_index].validation_rmse,
    )
    return SearchOutcome(spec=specs[best_index], model=results[best_index][0], trials=trials)
