"""
Response schemas (Pydantic models for the mock monitoring API).
"""
from typing import Dict, List, Literal, Tuple

from pydantic import BaseModel


class MatrixSeries(BaseModel):
    """One series of a range-query matrix: labels plus [seconds, "value"] pairs."""

    metric: Dict[str, str]
    values: List[Tuple[float, str]]


class MatrixData(BaseModel):
    resultType: Literal["matrix"] = "matrix"
    result: List[MatrixSeries]


class QueryRangeResponse(BaseModel):
    """Success envelope of a range query."""

    status: Literal["success"] = "success"
    data: MatrixData


class ErrorResponse(BaseModel):
    """Error envelope."""

    status: Literal["error"] = "error"
    errorType: str
    error: str
