"""
API v1 endpoints of the mock monitoring server.
"""
import re
from typing import Dict, Optional, Tuple

import numpy as np
from fastapi import APIRouter, Depends
from fastapi.responses import JSONResponse

from app.api.dependencies import get_archive
from app.core.data.types import MetricArchive
from app.schemas.responses import (
    ErrorResponse,
    MatrixData,
    MatrixSeries,
    QueryRangeResponse,
)

router = APIRouter()

_SELECTOR = re.compile(r"^\s*([A-Za-z_:][A-Za-z0-9_:]*)?\s*(?:\{(.*)\})?\s*$")
_MATCHER = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*"((?:[^"\\]|\\.)*)"\s*$')


class SelectorError(ValueError):
    pass


def parse_selector(query: str) -> Tuple[Optional[str], Dict[str, str]]:
    """
    Parse ``name{label="value",...}``; only equality matchers are supported.

    Returns:
        (metric name or None, label matchers)
    """
    match = _SELECTOR.match(query)
    if match is None or (match.group(1) is None and match.group(2) is None):
        raise SelectorError(f"unsupported query {query!r}")
    name, body = match.group(1), match.group(2)
    matchers: Dict[str, str] = {}
    if body and body.strip():
        for part in body.split(","):
            m = _MATCHER.match(part)
            if m is None:
                raise SelectorError(f"unsupported label matcher {part.strip()!r}")
            matchers[m.group(1)] = m.group(2)
    if name is None:
        name = matchers.get("__name__")
    return name, matchers


def _error(error: str, status_code: int = 400) -> JSONResponse:
    body = ErrorResponse(errorType="bad_data", error=error)
    return JSONResponse(status_code=status_code, content=body.model_dump())


@router.get("/query_range", response_model=QueryRangeResponse)
def query_range(
    query: str,
    start: float,
    end: float,
    step: float,
    archive: MetricArchive = Depends(get_archive),
):
    """Serve archive samples inside [start, end] for the selected series."""
    step_ms = int(round(step * 1000))
    if step_ms != archive.scrape_interval_ms:
        return _error(f"step {step_ms} ms does not match the scrape interval {archive.scrape_interval_ms} ms")
    if end < start:
        return _error("end timestamp must not be before start time")
    try:
        name, matchers = parse_selector(query)
    except SelectorError as exc:
        return _error(str(exc))

    start_ms = int(round(start * 1000))
    end_ms = int(round(end * 1000))
    result = []
    for (node, metric), series in archive.series.items():
        if name is not None and metric != name:
            continue
        labels = {"__name__": metric, "node": node}
        if any(labels.get(k) != v for k, v in matchers.items()):
            continue
        lo = int(np.searchsorted(series.timestamps, start_ms, side="left"))
        hi = int(np.searchsorted(series.timestamps, end_ms, side="right"))
        values = [
            (int(ts) / 1000.0, repr(float(v)))
            for ts, v in zip(series.timestamps[lo:hi], series.values[lo:hi])
        ]
        result.append(MatrixSeries(metric=labels, values=values))

    return QueryRangeResponse(data=MatrixData(result=result))
