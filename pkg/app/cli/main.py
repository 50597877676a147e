"""
Argument parsing and exit-code mapping of the ``perforacle`` CLI.

Exit codes: 0 success, 1 unexpected error, 2 configuration error,
3 data error, 4 infeasible selection.
"""

import argparse
import logging
from typing import Optional, Sequence

from app.cli import commands
from app.config.logging_config import configure_logging
from app.config.settings import get_settings
from app.core.errors import PerfOracleError
from app.core.features.catalog import CATALOG_VERSION

logger = logging.getLogger(__name__)


def _inputs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--metrics", help="metrics.jsonl input")
    parser.add_argument("--tasks", help="tasks.jsonl input (stages.jsonl is read alongside)")
    parser.add_argument("--scenario", help="Scenario file simulated in place of --metrics/--tasks")
    parser.add_argument("--app", help="Application id")
    parser.add_argument("--node", help="Node id")


def _sweep_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--windows", help="Comma-separated t_offset values in seconds, e.g. 5,20,60")
    parser.add_argument("--feature-steps", type=int, help="Step of the d sweep (default 10)")
    parser.add_argument("--feature-counts", help="Comma-separated explicit d values")
    parser.add_argument("--families", help="Comma-separated families, e.g. lr,rf,gbt,fnn,rnn,cnn")
    parser.add_argument("--tau", type=float, help="Inference budget as a fraction of the mean RTT")
    parser.add_argument("--theta", type=float, help="Inter-correlation threshold")
    parser.add_argument("--seed", type=int, help="Split, search and initialisation seed")
    parser.add_argument("--max-trials", type=int, help="Hyperparameter trials per candidate")
    parser.add_argument("--repetitions", type=int, help="Timed predictions per inference benchmark")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perforacle",
        description="Metric selection and RTT-predictor training from monitoring data",
    )
    parser.add_argument("--log-level", help="Override PERFORACLE_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Run a scenario into metrics, tasks and ground truth")
    simulate.add_argument("--scenario", required=True, help="Scenario file (.json or .toml)")
    simulate.add_argument("--out", required=True, help="Output directory")
    simulate.set_defaults(handler=commands.cmd_simulate)

    features = sub.add_parser("features", help="Feature catalog")
    features_sub = features.add_subparsers(dest="features_command", required=True)
    listing = features_sub.add_parser("list", help="Print the catalog in column order")
    listing.add_argument("--catalog", default=CATALOG_VERSION, help="Catalog version")
    listing.set_defaults(handler=commands.cmd_features_list)

    correlate = sub.add_parser("correlate", help="Rank the metrics of one (app, node)")
    _inputs(correlate)
    correlate.add_argument("--window", type=float, default=5.0, help="t_offset in seconds")
    correlate.add_argument("--theta", type=float, help="Inter-correlation threshold")
    correlate.add_argument("--catalog", default=CATALOG_VERSION, help="Catalog version")
    correlate.add_argument("--out", required=True, help="Output directory")
    correlate.set_defaults(handler=commands.cmd_correlate, tau=None, seed=None)

    select = sub.add_parser("select", help="Sweep candidates and pick the latency-feasible winner")
    _inputs(select)
    _sweep_flags(select)
    select.add_argument("--mode", choices=["pre_submission", "mid_execution"], help="Window mode")
    select.add_argument("--out", required=True, help="Output directory")
    select.set_defaults(handler=commands.cmd_select)

    modes = sub.add_parser("modes", help="Compare training modes across workload stages")
    _inputs(modes)
    _sweep_flags(modes)
    modes.add_argument("--family", required=True, help="Model family")
    modes.add_argument("--online-passes", type=int, default=10, help="Online update passes per stage")
    modes.add_argument("--out", required=True, help="Output directory")
    modes.set_defaults(handler=commands.cmd_modes)

    bench = sub.add_parser("bench", help="Inference and training time of a saved model")
    bench.add_argument("--model", required=True, help="Model file written by select")
    bench.add_argument("--tau", type=float, help="Budget fraction (default: the one it was selected with)")
    bench.add_argument("--repetitions", type=int, default=1000, help="Timed predictions")
    bench.add_argument("--warmup", type=int, default=100, help="Untimed predictions before timing")
    bench.add_argument("--out", help="Directory for bench.json")
    bench.set_defaults(handler=commands.cmd_bench)

    serve = sub.add_parser("serve-mock", help="Serve a metrics file over the range-query API")
    serve.add_argument("--metrics", required=True, help="metrics.jsonl to serve")
    serve.add_argument("--host", help="Bind address (default PERFORACLE_MOCK_HOST)")
    serve.add_argument("--port", type=int, help="Port (default PERFORACLE_MOCK_PORT)")
    serve.set_defaults(handler=commands.cmd_serve_mock)

    history = sub.add_parser("history", help="List recorded selections")
    history.add_argument("--app", help="Only this application")
    history.add_argument("--node", help="Only this node")
    history.add_argument("--limit", type=int, default=50, help="Maximum rows")
    history.add_argument("--db-url", help="Override PERFORACLE_RESULTS_DB_URL")
    history.set_defaults(handler=commands.cmd_history)

    scrape = sub.add_parser("scrape", help="Range-query a monitoring server into metrics.jsonl")
    scrape.add_argument("--url", required=True, help="Base URL of the monitoring server")
    scrape.add_argument("--query", action="append", required=True, help="Series selector (repeatable)")
    scrape.add_argument("--start", type=int, required=True, help="Range start, ms")
    scrape.add_argument("--end", type=int, required=True, help="Range end, ms")
    scrape.add_argument("--step-ms", type=int, help="Resolution (default PERFORACLE_SCRAPE_INTERVAL_MS)")
    scrape.add_argument("--out", required=True, help="Output directory")
    scrape.set_defaults(handler=commands.cmd_scrape)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level or get_settings().LOG_LEVEL)

    try:
        return args.handler(args)
    except PerfOracleError as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    except KeyboardInterrupt:
        logger.warning("Interrupted")
        return 130
    except Exception:
        logger.exception("%s failed unexpectedly", args.command)
        return 1
