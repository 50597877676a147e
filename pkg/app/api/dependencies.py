"""
FastAPI dependency injection helpers.
"""
from fastapi import HTTPException, Request

from app.core.data.types import MetricArchive


def get_archive(request: Request) -> MetricArchive:
    """
    Archive served by this application instance.

    Raises:
        HTTPException: 503 if the application was created without an archive
    """
    archive = getattr(request.app.state, "archive", None)
    if archive is None:
        raise HTTPException(status_code=503, detail="No metric archive loaded")
    return archive
