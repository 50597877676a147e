"""
SQLAlchemy ORM models for database tables.

Defines the schema of the selection history.
"""

from sqlalchemy import Boolean, Column, DateTime, Float, Integer, String, Text
from sqlalchemy.sql import func

from app.infrastructure.db.connection import Base


class SelectionRecord(Base):
    """
    One latency-constrained selection for an (app, node).

    Attributes:
        id: Primary key identifier
        app_id: Application the predictor is for
        node_id: Node the predictor is for
        mode: Window mode of the sweep (pre_submission or mid_execution)
        winner_id: Candidate id of the winner, None when infeasible
        family: Winning model family
        d: Winning number of metrics
        t_offset_s: Winning window length
        test_rmse: Normalized test RMSE of the winner
        accuracy: (1 - test RMSE) * 100
        tau: Budget fraction used
        mu_rtt_ms: Mean RTT the budget was derived from
        budget_us: Inference budget in microseconds
        infeasible: No candidate met the budget
        candidate_count: Rows of the candidate table
        run_config: RunConfig JSON of the invocation
        created_at: Timestamp when the selection was recorded
    """

    __tablename__ = "selections"

    id = Column(Integer, primary_key=True, index=True)
    app_id = Column(String, nullable=False, index=True)
    node_id = Column(String, nullable=False, index=True)
    mode = Column(String, nullable=False)
    winner_id = Column(String, nullable=True)
    family = Column(String, nullable=True)
    d = Column(Integer, nullable=True)
    t_offset_s = Column(Float, nullable=True)
    test_rmse = Column(Float, nullable=True)
    accuracy = Column(Float, nullable=True)
    tau = Column(Float, nullable=False)
    mu_rtt_ms = Column(Float, nullable=False)
    budget_us = Column(Float, nullable=False)
    infeasible = Column(Boolean, nullable=False, default=False)
    candidate_count = Column(Integer, nullable=False, default=0)
    run_config = Column(Text, nullable=True)
    created_at = Column(DateTime, nullable=False, default=func.now())
