"""
Remaining-RTT prediction service.

Holds one mid-execution predictor per (app, node) and re-estimates how long a
running task still needs once it is halfway through its expected RTT.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.data.types import MetricArchive, RunningTask, TaskLog, WindowMode, WindowSpec
from app.core.errors import NotTrainedError
from app.core.features.catalog import DEFAULT_CATALOG, FeatureCatalog, get_catalog
from app.core.features.extraction import extract_block
from app.core.models.base import TrainedModel, predict
from app.core.workflows.selection_workflow import SweepOutcome, select_from_sweep, sweep
from app.schemas.reports import SelectionResult
from app.schemas.requests import SweepConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictorBundle:
    """
    A trained remaining-RTT model with what it needs at prediction time.

    Attributes:
        model: Non-sequential model trained on mid-execution windows
        window: Window the model's features were extracted from
        metrics: Metrics whose columns the model reads
        catalog_version: Feature catalog the columns come from
        history_rtts: RTTs of the pair's past tasks, for the midpoint fallback
    """

    app_id: str
    node_id: str
    model: TrainedModel
    window: WindowSpec
    metrics: Tuple[str, ...]
    catalog_version: str
    history_rtts: Tuple[int, ...] = ()

    @property
    def historical_mean_rtt(self) -> Optional[float]:
        if not self.history_rtts:
            return None
        return float(np.mean(self.history_rtts))


class RemainingRttService:
    """Registry of remaining-RTT predictors keyed by (app, node)."""

    def __init__(self) -> None:
        self._bundles: Dict[Tuple[str, str], PredictorBundle] = {}

    def register(self, bundle: PredictorBundle) -> None:
        self._bundles[(bundle.app_id, bundle.node_id)] = bundle

    def bundle(self, app_id: str, node_id: str) -> PredictorBundle:
        try:
            return self._bundles[(app_id, node_id)]
        except KeyError:
            raise NotTrainedError(f"no remaining-RTT model for app {app_id!r} on node {node_id!r}") from None

    def predict_remaining(
        self,
        app_id: str,
        node_id: str,
        t_start: int,
        archive: MetricArchive,
        rtt_est: Optional[float] = None,
        task_id: str = "running",
    ) -> float:
        """
        Predict the time in ms from a running task's midpoint to its completion.

        The midpoint is ``t_start + 0.5 * rtt_est``; without an estimate the
        mean RTT of the pair's history is used. The task's end is not needed.

        Raises:
            NotTrainedError: no model for the pair, or no estimate and no history
            EmptyWindowError: the archive holds no sample in the task's window yet
        """
        bundle = self.bundle(app_id, node_id)
        if rtt_est is None:
            rtt_est = bundle.historical_mean_rtt
        if rtt_est is None:
            raise NotTrainedError(
                f"no RTT estimate for task {task_id} and no history for {app_id!r} on {node_id!r}"
            )

        task = RunningTask(task_id=task_id, app_id=app_id, node_id=node_id, t_start=int(t_start))
        model = bundle.model
        catalog = get_catalog(bundle.catalog_version)
        estimates = {task_id: float(rtt_est)}
        blocks = [
            extract_block(archive, [task], bundle.window, metric, catalog, estimates)
            for metric in bundle.metrics
        ]
        columns = [c for b in blocks for c in b.columns]
        row = np.hstack([b.values for b in blocks])[:, [columns.index(c) for c in model.metadata.columns]]
        X = row if model.params is None else model.params.transform_X(row)
        y = predict(model, X)
        if model.params is not None:
            y = model.params.inverse_y(y)
        return float(y[0])


def train_remaining_predictor(
    app_id: str,
    node_id: str,
    archive: MetricArchive,
    log: TaskLog,
    config: Optional[SweepConfig] = None,
    catalog: Optional[FeatureCatalog] = None,
    service: Optional[RemainingRttService] = None,
) -> Tuple[SweepOutcome, SelectionResult, RemainingRttService]:
    """
    Sweep mid-execution candidates, select the winner and register it.

    Without a feasible winner nothing is registered and the service raises
    NotTrainedError for the pair.
    """
    config = (config or SweepConfig()).model_copy(update={"mode": WindowMode.MID_EXECUTION})
    catalog = catalog or DEFAULT_CATALOG
    service = service or RemainingRttService()

    outcome = sweep(app_id, node_id, archive, log, config, catalog)
    result = select_from_sweep(outcome, config.tau)
    if result.winner is not None:
        winner = result.winner
        model = outcome.models[winner.candidate_id]
        metrics = tuple(sorted({c.split("::", 1)[0] for c in model.metadata.columns}))
        service.register(
            PredictorBundle(
                app_id=app_id,
                node_id=node_id,
                model=model,
                window=WindowSpec(winner.t_offset_s, WindowMode.MID_EXECUTION, archive.scrape_interval_ms),
                metrics=metrics,
                catalog_version=catalog.version,
                history_rtts=tuple(t.rtt for t in log.group(app_id, node_id)),
            )
        )
    else:
        logger.warning("No remaining-RTT predictor registered for %s on %s", app_id, node_id)
    return outcome, result, service
