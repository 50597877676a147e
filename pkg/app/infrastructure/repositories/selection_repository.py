"""
CRUD operations for the selection history.
"""

from typing import List, Optional

from sqlalchemy.orm import Session

from app.infrastructure.db.models import SelectionRecord
from app.schemas.reports import SelectionResult


def record_selection(
    db: Session,
    result: SelectionResult,
    run_config: Optional[str] = None,
) -> SelectionRecord:
    """
    Persist one selection.

    Args:
        db: SQLAlchemy database session.
        result: Selection to record.
        run_config: RunConfig JSON of the invocation.

    Returns:
        The newly created SelectionRecord.
    """
    winner = result.winner
    record = SelectionRecord(
        app_id=result.app_id,
        node_id=result.node_id,
        mode=result.mode,
        winner_id=winner.candidate_id if winner else None,
        family=winner.family if winner else None,
        d=winner.d if winner else None,
        t_offset_s=winner.t_offset_s if winner else None,
        test_rmse=winner.test_rmse if winner else None,
        accuracy=result.accuracy,
        tau=result.tau,
        mu_rtt_ms=result.mu_rtt_ms,
        budget_us=result.budget_us,
        infeasible=result.infeasible,
        candidate_count=len(result.candidates),
        run_config=run_config,
    )

    db.add(record)
    db.commit()
    db.refresh(record)

    return record


def list_selections(
    db: Session,
    app_id: Optional[str] = None,
    node_id: Optional[str] = None,
    skip: int = 0,
    limit: int = 50,
) -> List[SelectionRecord]:
    """
    Recorded selections, oldest first, optionally filtered by app and node.

    Args:
        db: SQLAlchemy database session.
        app_id: Only this application.
        node_id: Only this node.
        skip: Number of records to skip (offset).
        limit: Maximum number of records to return.
    """
    query = db.query(SelectionRecord)
    if app_id is not None:
        query = query.filter(SelectionRecord.app_id == app_id)
    if node_id is not None:
        query = query.filter(SelectionRecord.node_id == node_id)
    return query.order_by(SelectionRecord.id).offset(skip).limit(limit).all()
