"""
Generative RTT law of the simulator.

    rtt = max(1, round(base / speed * (1 + scale * sum_r s_r * u_r) * exp(sigma_log * z)))

where ``u_r`` is the noise-free utilization of resource ``r`` averaged over
the pre-submission lookback window, clamped to [0, 1], and ``scale`` is the
stage's law scale. The exported parameters are the testing oracle.

With a positive execution weight ``w`` the second half of a task reacts to
load seen while it runs: at the task's midpoint the remaining half of the
planned RTT is rescaled by

    ((1 - w) * inflation(u_pre) + w * inflation(u_exec)) / inflation(u_pre)

with ``u_exec`` averaged over the ticks between submission and midpoint.
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping

import numpy as np

from app.schemas.scenario import AppProfile, NodeProfile, Scenario

LAW_FORMULA = "rtt = max(1, round(base_ms / speed * (1 + law_scale * sum_r(sensitivity_r * u_r)) * exp(sigma_log * z)))"

EXECUTION_FORMULA = (
    "remaining = max(1, round((rtt - half) * ((1 - w) * infl(u_pre) + w * infl(u_exec)) / infl(u_pre))), "
    "half = max(1, rtt // 2)"
)


def utilization(
    node: NodeProfile,
    background: Mapping[str, float],
    demand: Mapping[str, float],
) -> Dict[str, float]:
    """Noise-free utilization per resource of a node, clamped to [0, 1]."""
    out = {}
    for resource in sorted(node.capacities):
        load = background.get(resource, 0.0) + demand.get(resource, 0.0)
        out[resource] = float(np.clip(load / node.capacities[resource], 0.0, 1.0))
    return out


@dataclass(frozen=True)
class RttLaw:
    """RTT law of one application on one node."""

    base_ms: float
    speed: float
    sensitivity: Mapping[str, float]
    noise_sigma_log: float
    execution_weight: float = 0.0

    @classmethod
    def for_placement(cls, app: AppProfile, node: NodeProfile) -> "RttLaw":
        return cls(
            base_ms=app.base_service_ms,
            speed=node.speed,
            sensitivity=dict(app.sensitivity),
            noise_sigma_log=app.noise_sigma_log,
            execution_weight=app.execution_weight,
        )

    @property
    def reacts_during_execution(self) -> bool:
        return self.execution_weight > 0

    def inflation(self, lookback_util: Mapping[str, float], law_scale: float = 1.0) -> float:
        contention = sum(
            coeff * lookback_util.get(resource, 0.0)
            for resource, coeff in sorted(self.sensitivity.items())
        )
        return 1.0 + law_scale * contention

    def blended_inflation(self, pre_inflation: float, execution_inflation: float) -> float:
        w = self.execution_weight
        return (1.0 - w) * pre_inflation + w * execution_inflation

    def noise_factor(self, z: float) -> float:
        return float(np.exp(self.noise_sigma_log * z))

    def rtt_ms(self, inflation: float, noise_factor: float) -> int:
        return max(1, int(round(self.base_ms / self.speed * inflation * noise_factor)))

    @staticmethod
    def first_half_ms(planned_rtt: int) -> int:
        return max(1, planned_rtt // 2)

    def remaining_ms(self, planned_rtt: int, pre_inflation: float, execution_inflation: float) -> int:
        """Remaining RTT after the midpoint, rescaled by the load seen since submission."""
        rest = planned_rtt - self.first_half_ms(planned_rtt)
        ratio = self.blended_inflation(pre_inflation, execution_inflation) / pre_inflation
        return max(1, int(round(rest * ratio)))


def export_law(scenario: Scenario) -> Dict[str, Any]:
    """Every generative parameter of a scenario, keyed for ``law.json``."""
    return {
        "formula": LAW_FORMULA,
        "execution_formula": EXECUTION_FORMULA,
        "utilization": "u_r = clip((background_r + sum of in-flight demand_r) / capacity_r, 0, 1)",
        "seed": scenario.seed,
        "lookback_s": scenario.lookback_s,
        "scrape_interval_ms": scenario.scrape_interval_ms,
        "placements": [
            {
                "app": p.app_id,
                "node": p.node_id,
                "base_ms": scenario.app(p.app_id).base_service_ms,
                "speed": scenario.node(p.node_id).speed,
                "sensitivity": dict(sorted(scenario.app(p.app_id).sensitivity.items())),
                "sigma_log": scenario.app(p.app_id).noise_sigma_log,
                "execution_weight": scenario.app(p.app_id).execution_weight,
            }
            for p in sorted(scenario.placements, key=lambda p: (p.node_id, p.app_id))
        ],
        "nodes": [node.model_dump(mode="json") for node in sorted(scenario.nodes, key=lambda n: n.node_id)],
        "apps": [app.model_dump(mode="json") for app in sorted(scenario.apps, key=lambda a: a.app_id)],
        "stages": [stage.model_dump(mode="json") for stage in scenario.stages],
        "decoys": {"count": scenario.decoy_metrics, "phi": scenario.decoy_phi},
        "constant_metrics": scenario.constant_metrics,
    }
