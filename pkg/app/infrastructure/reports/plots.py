"""
SVG figures for sweep and training-mode reports.

Figures are rendered with the Agg backend and a fixed SVG hash salt, and
carry no creation date, so reruns produce identical files.
"""

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from app.schemas.reports import CandidateResult, CandidateStatus, ModesReport, TrainingMode  # noqa: E402

plt.rcParams["svg.hashsalt"] = "perforacle"
plt.rcParams["svg.fonttype"] = "none"

_SVG_METADATA = {"Date": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    plt.close(fig)
    return path


def plot_rmse_vs_d(candidates: Sequence[CandidateResult], path, title: str = "") -> Path:
    """
    Test RMSE against the number of metrics d, one curve per (family, t_offset),
    plus the mean-predictor baseline of every window as a horizontal line.

    Curves carry SVG ids ``curve-<family>-<t_offset>``; baselines ``baseline-<t_offset>``.
    """
    curves: Dict[Tuple[str, float], List[Tuple[int, float]]] = defaultdict(list)
    baselines: Dict[float, float] = {}
    for c in candidates:
        if c.status != CandidateStatus.OK or c.test_rmse is None:
            continue
        if c.family == "mean":
            baselines[c.t_offset_s] = c.test_rmse
        else:
            curves[(c.family, c.t_offset_s)].append((c.d, c.test_rmse))

    fig, ax = plt.subplots(figsize=(8, 5))
    for (family, t_offset), points in sorted(curves.items()):
        points.sort()
        (line,) = ax.plot(
            [d for d, _ in points],
            [r for _, r in points],
            marker="o",
            label=f"{family.upper()} t={t_offset:g}s",
        )
        line.set_gid(f"curve-{family}-{t_offset:g}")
    for t_offset, value in sorted(baselines.items()):
        line = ax.axhline(value, linestyle="--", color="grey", linewidth=1, label=f"baseline t={t_offset:g}s")
        line.set_gid(f"baseline-{t_offset:g}")

    ax.set_xlabel("number of metrics d")
    ax.set_ylabel("test RMSE (normalized)")
    if title:
        ax.set_title(title)
    if curves or baselines:
        ax.legend(fontsize="small")
    return _save(fig, path)


def plot_modes(report: ModesReport, path, title: str = "") -> Path:
    """
    Normalized test RMSE per workload stage for every supported training mode.

    Curves carry SVG ids ``mode-<mode>``; unsupported modes are left out.
    """
    fig, ax = plt.subplots(figsize=(8, 5))
    for mode in TrainingMode:
        values = report.curve(mode)
        if all(v is None for v in values):
            continue
        points = [(s, v) for s, v in zip(report.stages, values) if v is not None]
        (line,) = ax.plot([s for s, _ in points], [v for _, v in points], marker="o", label=mode.value)
        line.set_gid(f"mode-{mode.value}")

    ax.set_xlabel("workload stage")
    ax.set_ylabel("test RMSE (normalized by stage-0 range)")
    ax.set_xticks(report.stages)
    ax.set_title(title or f"training modes ({report.family})")
    ax.legend(fontsize="small")
    return _save(fig, path)
