"""
FastAPI application entry point for the mock monitoring server.
"""
from typing import Optional

from fastapi import FastAPI

from app.api.v1 import endpoints
from app.core.data.types import MetricArchive

VERSION = "0.1.0"


def create_app(archive: Optional[MetricArchive] = None) -> FastAPI:
    """
    Build an application serving one metric archive over the range-query API.

    Args:
        archive: Archive to serve; endpoints answer 503 without one.
    """
    app = FastAPI(
        title="PerfOracle mock monitoring server",
        description="Range-query API over a recorded metric archive.",
        version=VERSION,
    )
    app.state.archive = archive

    app.include_router(endpoints.router, prefix="/api/v1", tags=["v1"])

    @app.get("/health")
    def health_check():
        """Health check endpoint."""
        loaded = app.state.archive is not None
        return {
            "status": "healthy",
            "version": VERSION,
            "series": len(app.state.archive) if loaded else 0,
        }

    return app
