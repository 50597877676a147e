"""
Shared fixtures: settings isolation, small archives and seeded scenarios.
"""
from typing import Dict, List, Optional

import numpy as np
import pytest

from app.config.settings import get_settings
from app.core.data.types import MetricArchive, MetricSeries, TaskLog, TaskRecord
from app.schemas.scenario import parse_scenario


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are re-read from the (monkeypatched) environment in every test."""
    monkeypatch.delenv("PERFORACLE_RESULTS_DB_URL", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def make_archive():
    """
    Build a one-node archive from {metric: values} sampled every 200 ms from t=0.
    """

    def _make(metrics: Dict[str, List[float]], node: str = "edge-1", period_ms: int = 200) -> MetricArchive:
        series = {}
        for name, values in metrics.items():
            ts = np.arange(len(values), dtype=np.int64) * period_ms
            series[(node, name)] = MetricSeries(name, node, ts, np.asarray(values, dtype=np.float64))
        return MetricArchive(series=series, scrape_interval_ms=period_ms)

    return _make


@pytest.fixture
def make_tasks():
    """Build tasks of one (app, node) from (t_start, rtt) pairs."""

    def _make(
        pairs,
        app: str = "detector",
        node: str = "edge-1",
        stages: Optional[List[int]] = None,
    ) -> List[TaskRecord]:
        return [
            TaskRecord(
                task_id=f"{node}-{app}-{k:06d}",
                app_id=app,
                node_id=node,
                t_start=int(t_start),
                t_end=int(t_start + rtt),
                stage=None if stages is None else stages[k],
            )
            for k, (t_start, rtt) in enumerate(pairs)
        ]

    return _make


@pytest.fixture
def make_log(make_tasks):
    def _make(pairs, **kwargs) -> TaskLog:
        return TaskLog(records=tuple(make_tasks(pairs, **kwargs)))

    return _make


def oracle_scenario_data(seed: int = 0, tasks: int = 150, decoys: int = 0, sigma_log: float = 0.0) -> dict:
    """
    Single-cause scenario whose RTT is an exact linear function of the
    windowed mean CPU utilization when ``sigma_log`` is 0.

    Background CPU levels are multiples of 0.2 and the base time is 125 ms,
    so every RTT is an integer before rounding.
    """
    return {
        "seed": seed,
        "nodes": [
            {
                "node_id": "edge-1",
                "capacities": {"cpu": 1.0},
                "background": {"cpu": [0.0, 0.2, 0.4, 0.6]},
                "background_period_s": 1.0,
            }
        ],
        "apps": [
            {
                "app_id": "detector",
                "base_service_ms": 125.0,
                "t_max_s": 0.5,
                "sensitivity": {"cpu": 1.0},
                "noise_sigma_log": sigma_log,
            }
        ],
        "placements": [{"app_id": "detector", "node_id": "edge-1"}],
        "stages": [{"active": ["detector"], "tasks": tasks}],
        "decoy_metrics": decoys,
    }


def drift_scenario_data(seed: int = 0, tasks: int = 150) -> dict:
    """
    Three stages on one node: the tracked app runs alone, then with one and
    then two network-heavy neighbours whose load inflates its RTT.
    """
    return {
        "seed": seed,
        "nodes": [
            {
                "node_id": "edge-1",
                "capacities": {"cpu": 1.0, "net": 1.0},
                "background": {"cpu": [0.0, 0.2, 0.4, 0.6]},
                "background_period_s": 1.0,
            }
        ],
        "apps": [
            {
                "app_id": "tracker",
                "base_service_ms": 100.0,
                "t_max_s": 0.5,
                "sensitivity": {"cpu": 0.5, "net": 1.5},
            },
            {"app_id": "uploader", "base_service_ms": 300.0, "t_max_s": 0.3, "demand": {"net": 0.4}},
            {"app_id": "streamer", "base_service_ms": 400.0, "t_max_s": 0.3, "demand": {"net": 0.4}},
        ],
        "placements": [
            {"app_id": "tracker", "node_id": "edge-1"},
            {"app_id": "uploader", "node_id": "edge-1"},
            {"app_id": "streamer", "node_id": "edge-1"},
        ],
        "stages": [
            {"active": ["tracker"], "tasks": tasks},
            {"active": ["tracker", "uploader"], "tasks": tasks},
            {"active": ["tracker", "uploader", "streamer"], "tasks": tasks},
        ],
    }


def execution_scenario_data(seed: int = 0, tasks: int = 300, weight: float = 1.0) -> dict:
    """
    Long tasks on a node whose CPU background is redrawn every scrape, so
    the load a task meets while running is independent of its lookback.
    """
    return {
        "seed": seed,
        "nodes": [
            {
                "node_id": "edge-1",
                "capacities": {"cpu": 1.0},
                "background": {"cpu": [0.0, 0.25, 0.5, 0.75, 1.0]},
                "background_period_s": 0.2,
            }
        ],
        "apps": [
            {
                "app_id": "renderer",
                "base_service_ms": 2000.0,
                "t_max_s": 0.5,
                "sensitivity": {"cpu": 1.0},
                "execution_weight": weight,
            }
        ],
        "placements": [{"app_id": "renderer", "node_id": "edge-1"}],
        "stages": [{"active": ["renderer"], "tasks": tasks}],
        "lookback_s": 1.0,
    }


@pytest.fixture
def oracle_scenario():
    def _make(**kwargs):
        return parse_scenario(oracle_scenario_data(**kwargs))

    return _make


@pytest.fixture
def drift_scenario():
    def _make(**kwargs):
        return parse_scenario(drift_scenario_data(**kwargs))

    return _make
