"""
Command implementations of the ``perforacle`` CLI.

Every command validates its RunConfig first, writes ``run_config.json`` and
its reports into ``--out``, and keeps wall-clock data in ``metadata.json``
and timing files.
"""

import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Tuple

from app.config.settings import get_settings
from app.core.correlation.perf_correlate import perf_correlate
from app.core.data.assembly import assemble_feature_table
from app.core.data.stability import drop_stable_metrics
from app.core.data.types import MetricArchive, TaskLog, WindowMode, WindowSpec
from app.core.errors import ConfigurationError, InfeasibleSelectionError, SearchFailedError
from app.core.features.catalog import get_catalog
from app.core.models.benchmark import measure_inference
from app.core.services.selection_service import budget_us
from app.core.simulation.engine import run_scenario
from app.core.workflows.modes_workflow import run_modes
from app.core.workflows.selection_workflow import SweepOutcome, select_from_sweep, sweep
from app.infrastructure.clients.monitoring_client import get_monitoring_client, scrape_remote
from app.infrastructure.reports import plots, tables
from app.infrastructure.repositories.jsonl_repository import load_metrics, load_tasks, save_metrics, save_tasks
from app.infrastructure.repositories.model_repository import load_model, save_model
from app.main import VERSION
from app.schemas.reports import CandidateStatus, SelectionResult
from app.schemas.requests import RunConfig, SweepConfig, build_config
from app.schemas.scenario import load_scenario

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _split(value: Optional[str]) -> Optional[List[str]]:
    if value is None:
        return None
    return [part.strip() for part in value.split(",") if part.strip()]


def sweep_config(args) -> SweepConfig:
    """SweepConfig from the common sweep flags; unset flags keep their defaults."""
    settings = get_settings()
    values = {
        "tau": args.tau if args.tau is not None else settings.TAU,
        "theta": args.theta if args.theta is not None else settings.THETA,
        "seed": args.seed if args.seed is not None else settings.DEFAULT_SEED,
    }
    optional = {
        "windows_s": _split(getattr(args, "windows", None)),
        "families": _split(getattr(args, "families", None)),
        "feature_counts": _split(getattr(args, "feature_counts", None)),
        "feature_step": getattr(args, "feature_steps", None),
        "mode": getattr(args, "mode", None),
        "max_trials": getattr(args, "max_trials", None),
        "repetitions": getattr(args, "repetitions", None),
    }
    values.update({k: v for k, v in optional.items() if v is not None})
    return build_config(SweepConfig, **values)


def run_config(args, sweep: Optional[SweepConfig] = None) -> RunConfig:
    return build_config(
        RunConfig,
        command=args.command,
        metrics=getattr(args, "metrics", None),
        tasks=getattr(args, "tasks", None),
        scenario=getattr(args, "scenario", None),
        app=getattr(args, "app", None),
        node=getattr(args, "node", None),
        out=args.out,
        family=getattr(args, "family", None),
        sweep=sweep or SweepConfig(),
    )


class _RunFiles:
    """Output directory of one invocation with its provenance files."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.out = Path(config.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.started = datetime.now(timezone.utc)
        tables.write_json(config, self.out / "run_config.json")

    def finish(self, **extra) -> None:
        finished = datetime.now(timezone.utc)
        metadata = {
            "command": self.config.command,
            "version": VERSION,
            "started_at": self.started.isoformat(),
            "finished_at": finished.isoformat(),
            "duration_s": (finished - self.started).total_seconds(),
        }
        metadata.update(extra)
        tables.write_json(metadata, self.out / "metadata.json")


def load_inputs(config: RunConfig) -> Tuple[MetricArchive, TaskLog]:
    """Archive and task log from JSON Lines files or a scenario run."""
    if config.scenario:
        result = run_scenario(load_scenario(config.scenario))
        return result.archive, result.log
    if not config.metrics or not config.tasks:
        raise ConfigurationError("--metrics and --tasks (or --scenario) are required", "metrics")
    archive = load_metrics(config.metrics, get_settings().SCRAPE_INTERVAL_MS)
    return archive, load_tasks(config.tasks)


def _pairs(config: RunConfig, log: TaskLog) -> List[Tuple[str, str]]:
    if config.app and config.node:
        return [(config.app, config.node)]
    pairs = [
        key
        for key in log.groups()
        if (config.app is None or key[0] == config.app) and (config.node is None or key[1] == config.node)
    ]
    if not pairs:
        raise ConfigurationError(f"no (app, node) group matches app={config.app} node={config.node}", "app")
    return pairs


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    """Run a scenario and write metrics, tasks, stages, ground truth and law."""
    config = run_config(args)
    scenario = load_scenario(config.scenario)
    files = _RunFiles(config)

    result = run_scenario(scenario)
    save_metrics(result.archive, files.out / "metrics.jsonl", records=result.records)
    save_tasks(result.log, files.out / "tasks.jsonl")
    tables.write_csv(result.ground_truth, files.out / "ground_truth.csv")
    tables.write_json(result.law, files.out / "law.json")

    files.finish(tasks=len(result.log), stages=len(result.log.stages))
    logger.info("Simulated %d tasks into %s", len(result.log), files.out)
    return 0


def cmd_features_list(args) -> int:
    """Print the feature catalog in column order."""
    catalog = get_catalog(args.catalog)
    sys.stdout.write(f"catalog {catalog.version}: {len(catalog)} features\n")
    for position, name in enumerate(catalog.names):
        sys.stdout.write(f"{position:2d}  {name}\n")
    return 0


def cmd_correlate(args) -> int:
    """Rank the metrics of one (app, node) on one window."""
    sweep = sweep_config(args)
    config = run_config(args, sweep)
    if not config.app or not config.node:
        raise ConfigurationError("correlate needs --app and --node", "app")
    archive, log = load_inputs(config)
    files = _RunFiles(config)

    tasks = log.group(config.app, config.node)
    spec = WindowSpec(args.window, WindowMode.PRE_SUBMISSION, archive.scrape_interval_ms)
    windows = [(t.node_id, t.t_start - spec.offset_ms, t.t_start - 1) for t in tasks]
    node_archive = drop_stable_metrics(archive.for_node(config.node), windows)
    table = assemble_feature_table(node_archive, tasks, spec, get_catalog(args.catalog))
    _, report = perf_correlate(table, sweep.theta)

    tables.write_csv(tables.correlation_frame(report), files.out / "correlation.csv")
    tables.write_json(report, files.out / "correlation.json")
    files.finish()
    for rank, entry in enumerate(report.ranked[:10], start=1):
        sys.stdout.write(f"{rank:3d}  {entry.score:.4f}  {entry.metric}\n")
    return 0


def _write_selection(out: Path, outcome: SweepOutcome, result: SelectionResult, title: str) -> None:
    tables.write_csv(tables.candidates_frame(result.candidates), out / "candidates.csv")
    tables.write_csv(tables.curves_frame(result.candidates), out / "rmse_curves.csv")
    timings = tables.timings_frame(result.candidates)
    tables.write_csv(timings, out / "timings.csv")
    tables.write_json({"candidates": tables.records([timings])}, out / "timings.json")
    tables.write_json(tables.selection_summary(result), out / "selection.json")
    for t_offset, report in outcome.reports.items():
        tables.write_json(report, out / f"correlation_t{t_offset:g}.json")
    plots.plot_rmse_vs_d(result.candidates, out / "rmse_vs_d.svg", title)

    if result.winner is not None:
        model = outcome.models[result.winner.candidate_id]
        extra = dict(
            model.metadata.extra,
            candidate_id=result.winner.candidate_id,
            selection_mu_rtt_ms=result.mu_rtt_ms,
            tau=result.tau,
        )
        save_model(replace(model, metadata=replace(model.metadata, extra=extra)), out / "winner.model")


def _record_history(result: SelectionResult, config: RunConfig) -> None:
    if not get_settings().RESULTS_DB_URL:
        return
    from app.infrastructure.db.connection import session_scope
    from app.infrastructure.repositories.selection_repository import record_selection

    with session_scope() as db:
        record_selection(db, result, run_config=config.model_dump_json())


def cmd_select(args) -> int:
    """Sweep, select and report for one or every (app, node)."""
    sweep_cfg = sweep_config(args)
    config = run_config(args, sweep_cfg)
    archive, log = load_inputs(config)
    files = _RunFiles(config)
    pairs = _pairs(config, log)

    infeasible, failed = [], []
    for app_id, node_id in pairs:
        out = files.out if len(pairs) == 1 else files.out / f"{app_id}__{node_id}"
        outcome = sweep(app_id, node_id, archive, log, sweep_cfg)
        result = select_from_sweep(outcome, sweep_cfg.tau)
        _write_selection(out, outcome, result, f"{app_id} on {node_id} ({sweep_cfg.mode.value})")
        _record_history(result, config)

        if all(c.status != CandidateStatus.OK for c in result.candidates):
            failed.append(f"{app_id}/{node_id}")
        elif result.infeasible:
            infeasible.append(f"{app_id}/{node_id}")
        elif result.winner is not None:
            sys.stdout.write(
                f"{app_id} on {node_id}: {result.winner.candidate_id} "
                f"accuracy {result.accuracy:.2f}% (budget {result.budget_us:.1f} us)\n"
            )

    files.finish(pairs=len(pairs))
    if failed:
        raise SearchFailedError(f"every candidate failed for {', '.join(failed)}")
    if infeasible:
        raise InfeasibleSelectionError(f"no candidate meets the inference budget for {', '.join(infeasible)}")
    return 0


def cmd_modes(args) -> int:
    """Compare no_retrain, full_retrain and online training across stages."""
    sweep_cfg = sweep_config(args)
    config = run_config(args, sweep_cfg)
    if not config.app or not config.node or config.family is None:
        raise ConfigurationError("modes needs --app, --node and --family", "family")
    archive, log = load_inputs(config)
    files = _RunFiles(config)

    report = run_modes(archive, log, config.app, config.node, config.family, sweep_cfg, online_passes=args.online_passes)
    tables.write_csv(tables.modes_frame(report), files.out / "modes.csv")
    tables.write_json(
        report.model_copy(
            update={"results": [r.model_copy(update={"update_time_ms": None}) for r in report.results]}
        ),
        files.out / "modes.json",
    )
    tables.write_csv(tables.modes_timings_frame(report), files.out / "timings.csv")
    plots.plot_modes(report, files.out / "modes.svg", f"{config.app} on {config.node} ({report.family})")
    files.finish(stages=len(report.stages))
    return 0


def _recorded_train_time(model_path: Path, candidate: Optional[str]) -> Optional[float]:
    """Training time of a winner as logged in the timings.json written next to it by select."""
    timings = model_path.parent / "timings.json"
    if candidate is None or not timings.is_file():
        return None
    for row in json.loads(timings.read_text(encoding="utf-8")).get("candidates", []):
        if row.get("candidate_id") == candidate:
            return row.get("train_time_ms")
    return None


def cmd_bench(args) -> int:
    """
    Inference and training time of a saved model, checked against its budget.

    Containers carry no wall-clock data; the training time comes from the
    select run's timings.json when it sits next to the model.
    """
    model = load_model(args.model)
    stats = measure_inference(model, repetitions=args.repetitions, warmup=args.warmup)
    tau = args.tau if args.tau is not None else model.metadata.extra.get("tau", get_settings().TAU)
    mu = model.metadata.extra.get("selection_mu_rtt_ms", model.metadata.mu_rtt_ms)
    report = {
        "model": str(args.model),
        "family": model.family.value,
        "inference": stats.model_dump(mode="json"),
        "train_time_ms": _recorded_train_time(Path(args.model), model.metadata.extra.get("candidate_id")),
        "mu_rtt_ms": mu,
        "tau": tau,
        "budget_us": budget_us(mu, tau) if mu is not None else None,
        "within_budget": stats.median_us <= budget_us(mu, tau) if mu is not None else None,
    }
    if args.out:
        tables.write_json(report, Path(args.out) / "bench.json")
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_serve_mock(args) -> int:
    """Serve a metrics file over the range-query API until interrupted."""
    import uvicorn

    from app.main import create_app

    settings = get_settings()
    archive = load_metrics(args.metrics, settings.SCRAPE_INTERVAL_MS)
    uvicorn.run(
        create_app(archive),
        host=args.host or settings.MOCK_HOST,
        port=args.port or settings.MOCK_PORT,
        log_level=settings.LOG_LEVEL.lower(),
    )
    return 0


def cmd_history(args) -> int:
    """List recorded selections."""
    from app.infrastructure.db.connection import session_scope
    from app.infrastructure.repositories.selection_repository import list_selections

    with session_scope(args.db_url) as db:
        rows = list_selections(db, app_id=args.app, node_id=args.node, limit=args.limit)
        for row in rows:
            winner = row.winner_id or "infeasible"
            accuracy = f"{row.accuracy:.2f}%" if row.accuracy is not None else "-"
            sys.stdout.write(
                f"{row.id:4d}  {row.created_at:%Y-%m-%d %H:%M:%S}  {row.app_id}/{row.node_id}  "
                f"{row.mode}  {winner}  {accuracy}\n"
            )
    return 0


def cmd_scrape(args) -> int:
    """Range-query a monitoring server into metrics.jsonl."""
    settings = get_settings()
    step_ms = args.step_ms or settings.SCRAPE_INTERVAL_MS
    archive = scrape_remote(
        args.url,
        args.query,
        args.start,
        args.end,
        step_ms,
        client=get_monitoring_client(args.url),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_metrics(archive, out / "metrics.jsonl")
    logger.info("Wrote %d series to %s", len(archive), out / "metrics.jsonl")
    return 0
