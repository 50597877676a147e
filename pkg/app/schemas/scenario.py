"""
Scenario schemas for the synthetic edge-cluster simulator.

A scenario documents every generative parameter: node capacities and noise,
application demands and sensitivities, placements, the stage schedule and
the sample-size criterion that ends a stage.
"""
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.errors import ConfigurationError


class _ScenarioModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ConfirmParams(_ScenarioModel):
    """Median-deviation criterion: with confidence ``alpha`` the sample median is within ``r`` of the true one."""

    alpha: float = Field(default=0.95, gt=0, lt=1)
    r: float = Field(default=0.05, gt=0, lt=1)


class NodeProfile(_ScenarioModel):
    """
    One edge node.

    Attributes:
        node_id: Node name used in metric and task records
        speed: Service-time divisor (1.0 = reference node)
        capacities: Capacity per resource in abstract units
        noise_sigma: Gaussian noise added to every emitted utilization sample
        cores: Number of per-core sub-series emitted for the "cpu" resource
        background: Candidate background load levels per resource
        background_period_s: Interval at which background levels are redrawn
    """

    node_id: str
    speed: float = Field(default=1.0, ge=0.1)
    capacities: Dict[str, float] = Field(default_factory=lambda: {"cpu": 1.0, "mem": 1.0, "net": 1.0})
    noise_sigma: float = Field(default=0.0, ge=0)
    cores: int = Field(default=1, ge=1)
    background: Dict[str, List[float]] = Field(default_factory=dict)
    background_period_s: float = Field(default=30.0, gt=0)

    @field_validator("capacities")
    def capacities_must_be_positive(cls, v):
        if not v:
            raise ValueError("at least one resource is required")
        bad = sorted(name for name, cap in v.items() if not cap > 0)
        if bad:
            raise ValueError(f"capacities must be > 0: {', '.join(bad)}")
        return v

    @model_validator(mode="after")
    def background_resources_known(self):
        unknown = sorted(set(self.background) - set(self.capacities))
        if unknown:
            raise ValueError(f"background for unknown resources: {', '.join(unknown)}")
        for name, levels in self.background.items():
            if not levels or any(level < 0 for level in levels):
                raise ValueError(f"background levels for {name!r} must be a non-empty list of values >= 0")
        return self


class AppProfile(_ScenarioModel):
    """
    One application and its closed-loop client.

    Attributes:
        app_id: Application name
        base_service_ms: Service time on an idle reference node
        demand: Resource units held while one task is in flight
        t_max_s: Client think time is drawn from Uniform[0, t_max_s]
        sensitivity: RTT inflation per unit of utilization, per resource
        noise_sigma_log: Sigma of the multiplicative lognormal RTT noise
        execution_weight: Share of the second half of a task driven by load seen while it runs
    """

    app_id: str
    base_service_ms: float = Field(gt=0)
    demand: Dict[str, float] = Field(default_factory=dict)
    t_max_s: float = Field(gt=0)
    sensitivity: Dict[str, float] = Field(default_factory=dict)
    noise_sigma_log: float = Field(default=0.0, ge=0)
    execution_weight: float = Field(default=0.0, ge=0, le=1)

    @field_validator("demand")
    def demand_not_negative(cls, v):
        if any(units < 0 for units in v.values()):
            raise ValueError("demand must be >= 0")
        return v


class Placement(_ScenarioModel):
    app_id: str
    node_id: str


class StageSpec(_ScenarioModel):
    """
    One workload stage.

    ``tasks`` fixes the number of completed tasks per active application;
    when omitted the stage ends once the sample-size criterion holds.
    ``law_scale`` multiplies every sensitivity coefficient during the stage.
    """

    active: List[str]
    tasks: Optional[int] = Field(default=None, ge=1)
    law_scale: float = Field(default=1.0, ge=0)


class Scenario(_ScenarioModel):
    """A complete, seeded simulator configuration."""

    seed: int = 0
    nodes: List[NodeProfile]
    apps: List[AppProfile]
    placements: List[Placement]
    stages: List[StageSpec]
    confirm: ConfirmParams = Field(default_factory=ConfirmParams)
    check_interval_s: float = Field(default=60.0, gt=0)
    max_tasks_per_stage: int = Field(default=10_000, ge=1)
    lookback_s: float = Field(default=5.0, gt=0)
    warmup_s: Optional[float] = Field(default=None, ge=0)
    scrape_interval_ms: int = Field(default=200, gt=0)
    decoy_metrics: int = Field(default=0, ge=0)
    decoy_phi: float = Field(default=0.9, ge=0, lt=1)
    constant_metrics: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def references_resolve(self):
        node_ids = [n.node_id for n in self.nodes]
        app_ids = [a.app_id for a in self.apps]
        if not node_ids or not app_ids:
            raise ValueError("at least one node and one app are required")
        for kind, ids in (("node", node_ids), ("app", app_ids)):
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate {kind} ids")
        pairs = [(p.app_id, p.node_id) for p in self.placements]
        if len(pairs) != len(set(pairs)):
            raise ValueError("duplicate placement")
        for app_id, node_id in pairs:
            if app_id not in app_ids:
                raise ValueError(f"placement references unknown app {app_id!r}")
            if node_id not in node_ids:
                raise ValueError(f"placement references unknown node {node_id!r}")
        if not self.stages:
            raise ValueError("at least one stage is required")
        for i, stage in enumerate(self.stages):
            unknown = sorted(set(stage.active) - set(app_ids))
            if unknown:
                raise ValueError(f"stage {i} activates unknown apps: {', '.join(unknown)}")
        capacities = {n.node_id: n.capacities for n in self.nodes}
        by_app = {a.app_id: a for a in self.apps}
        for app_id, node_id in pairs:
            missing = sorted(set(by_app[app_id].demand) - set(capacities[node_id]))
            if missing:
                raise ValueError(
                    f"app {app_id!r} demands resources node {node_id!r} lacks: {', '.join(missing)}"
                )
        return self

    @property
    def effective_warmup_s(self) -> float:
        return self.lookback_s if self.warmup_s is None else self.warmup_s

    def node(self, node_id: str) -> NodeProfile:
        return next(n for n in self.nodes if n.node_id == node_id)

    def app(self, app_id: str) -> AppProfile:
        return next(a for a in self.apps if a.app_id == app_id)

    def apps_on(self, node_id: str) -> List[str]:
        """Sorted ids of the applications placed on a node."""
        return sorted(p.app_id for p in self.placements if p.node_id == node_id)


def _field_path(exc: ValidationError) -> str:
    loc = exc.errors()[0].get("loc", ())
    return ".".join(str(part) for part in loc) or "scenario"


def parse_scenario(data: dict) -> Scenario:
    """
    Validate a scenario mapping.

    Raises:
        ConfigurationError: naming the first failing field path
    """
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigurationError(first.get("msg", str(exc)), _field_path(exc)) from None


def load_scenario(path) -> Scenario:
    """
    Load a scenario from a ``.json`` or ``.toml`` file.

    Raises:
        ConfigurationError: missing file, unknown format, syntax error or invalid field
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"scenario file not found: {path}", "scenario")

    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".toml":
            data = tomllib.loads(text)
        elif path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            raise ConfigurationError(f"unsupported scenario format {path.suffix!r}", "scenario")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot parse {path.name}: {exc}", "scenario") from None

    return parse_scenario(data)
