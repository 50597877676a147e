"""
Latency-constrained model selection.

Among candidates whose median single-row inference time fits within
``tau`` of the application's mean RTT, pick the one with the lowest test RMSE.
"""

import logging
from typing import Optional, Sequence

from app.core.errors import InvalidInputError
from app.schemas.reports import CandidateResult, CandidateStatus, SelectionResult

logger = logging.getLogger(__name__)


def budget_us(mu_rtt_ms: float, tau: float) -> float:
    """Inference budget in microseconds."""
    return mu_rtt_ms * tau * 1000.0


def _rank_key(candidate: CandidateResult):
    return (
        candidate.test_rmse,
        candidate.inference.median_us,
        candidate.d,
        candidate.t_offset_s,
        candidate.family,
        candidate.candidate_id,
    )


def _scored(candidate: CandidateResult) -> bool:
    return (
        candidate.status == CandidateStatus.OK
        and candidate.test_rmse is not None
        and candidate.inference is not None
    )


def select(
    candidates: Sequence[CandidateResult],
    mu_rtt_ms: float,
    tau: float = 0.01,
    app_id: Optional[str] = None,
    node_id: Optional[str] = None,
    mode: Optional[str] = None,
) -> SelectionResult:
    """
    Pick the feasible candidate with the lowest test RMSE.

    A candidate is feasible when its median inference time is at most
    ``mu_rtt_ms * tau`` (the boundary itself is feasible). Ties are broken by
    inference time, then d, then t_offset, so the winner does not depend on
    the order of the table.

    Args:
        candidates: Sweep results of one (app, node)
        mu_rtt_ms: Mean RTT of the application in ms
        tau: Budget as a fraction of the mean RTT
        app_id, node_id, mode: Defaults to the first candidate's values

    Returns:
        SelectionResult with every candidate's feasibility recomputed

    Raises:
        InvalidInputError: empty candidate table
    """
    if not candidates:
        raise InvalidInputError("cannot select from an empty candidate table")

    limit = budget_us(mu_rtt_ms, tau)
    marked = [
        c.model_copy(update={"feasible": _scored(c) and c.inference.median_us <= limit})
        for c in candidates
    ]
    scored = sorted((c for c in marked if _scored(c)), key=_rank_key)
    feasible = [c for c in scored if c.feasible]

    winner = feasible[0] if feasible else None
    if winner is None:
        logger.warning(
            "No candidate meets the %.1f us inference budget (%d scored)", limit, len(scored)
        )
    else:
        logger.info(
            "Selected %s: test RMSE %.4f, median inference %.1f us (budget %.1f us)",
            winner.candidate_id,
            winner.test_rmse,
            winner.inference.median_us,
            limit,
        )

    first = candidates[0]
    return SelectionResult(
        app_id=app_id or first.app_id,
        node_id=node_id or first.node_id,
        mode=mode or first.mode,
        tau=tau,
        mu_rtt_ms=mu_rtt_ms,
        budget_us=limit,
        winner=winner,
        infeasible=winner is None,
        unconstrained_best=scored[0] if scored and winner is None else None,
        candidates=marked,
    )
