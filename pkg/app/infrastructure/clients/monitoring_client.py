"""
Monitoring server HTTP client.

Range queries against ``<base>/api/v1/query_range`` returning the standard
matrix envelope, with retries and exponential backoff.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import httpx

from app.config.settings import get_settings
from app.core.data.types import MetricArchive
from app.core.errors import ConfigurationError, RemoteError, TransportError
from app.schemas.records import MetricLine

logger = logging.getLogger(__name__)


class MonitoringClient:
    """
    Client for a monitoring server's range-query API.

    Handles:
    - Range queries with server-side step
    - Retries on transport failures and 5xx responses
    - Translation of error envelopes into RemoteError
    """

    def __init__(
        self,
        base_url: str,
        timeout_s: Optional[float] = None,
        retries: Optional[int] = None,
        backoff_s: Optional[float] = None,
        http_client: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        """
        Initialize the client.

        Args:
            base_url: Server root, e.g. "http://127.0.0.1:9090"
            timeout_s: Request timeout. If None, loads from settings.
            retries: Attempts per query. If None, loads from settings.
            backoff_s: First retry delay, doubled per attempt. If None, loads from settings.
            http_client: Preconfigured httpx client (tests pass a TestClient or MockTransport).
            sleep: Delay function between attempts.
        """
        settings = get_settings()
        self._base_url = base_url.rstrip("/")
        self._retries = retries if retries is not None else settings.REMOTE_RETRIES
        self._backoff_s = backoff_s if backoff_s is not None else settings.REMOTE_BACKOFF_S
        self._client = http_client or httpx.Client(
            timeout=timeout_s if timeout_s is not None else settings.REMOTE_TIMEOUT_S
        )
        self._sleep = sleep

    def query_range(self, query: str, start_ms: int, end_ms: int, step_ms: int) -> List[Dict[str, Any]]:
        """
        Run one range query.

        Returns:
            The envelope's ``data.result`` list

        Raises:
            TransportError: every attempt failed at the HTTP level
            RemoteError: the server answered with status other than "success"
        """
        params = {
            "query": query,
            "start": f"{start_ms / 1000:.3f}",
            "end": f"{end_ms / 1000:.3f}",
            "step": f"{step_ms / 1000:.3f}",
        }
        url = f"{self._base_url}/api/v1/query_range"
        last_error = "no attempt made"

        for attempt in range(1, self._retries + 1):
            try:
                response = self._client.get(url, params=params)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if response.status_code < 500:
                    return self._parse(response, query)
                last_error = f"HTTP {response.status_code}"

            if attempt < self._retries:
                delay = self._backoff_s * (2 ** (attempt - 1))
                logger.warning(
                    "Range query %r failed (%s), retry %d/%d in %.2fs",
                    query,
                    last_error,
                    attempt,
                    self._retries - 1,
                    delay,
                )
                self._sleep(delay)

        raise TransportError(f"range query {query!r} failed after {self._retries} attempts: {last_error}")

    @staticmethod
    def _parse(response: httpx.Response, query: str) -> List[Dict[str, Any]]:
        try:
            body = response.json()
        except ValueError:
            raise RemoteError(f"query {query!r}: response is not JSON (HTTP {response.status_code})") from None
        if body.get("status") != "success":
            raise RemoteError(
                f"query {query!r}: {body.get('errorType', 'error')}: {body.get('error', 'unknown error')}"
            )
        data = body.get("data") or {}
        return list(data.get("result") or [])


def _series_to_line(series: Dict[str, Any], query: str) -> MetricLine:
    labels = dict(series.get("metric") or {})
    name = labels.get("__name__") or query.split("{", 1)[0].strip()
    node_label = "node" if labels.get("node") else "instance"
    node = labels.get(node_label)
    if not node:
        raise RemoteError(f"query {query!r}: series without node or instance label")
    extra = sorted((k, v) for k, v in labels.items() if k not in ("__name__", "job", node_label))
    instance = ",".join(f"{k}={v}" for k, v in extra) or None

    pairs = series.get("values") or []
    return MetricLine(
        metric=name,
        node=node,
        instance=instance,
        ts_ms=[int(round(float(ts) * 1000)) for ts, _ in pairs],
        values=[float(v) for _, v in pairs],
    )


def scrape_remote(
    base_url: str,
    queries: Union[str, Sequence[str]],
    start_ms: int,
    end_ms: int,
    step_ms: int,
    expected_step_ms: Optional[int] = None,
    client: Optional[MonitoringClient] = None,
) -> MetricArchive:
    """
    Fetch one or more range queries and assemble them into an archive.

    Queries are fetched concurrently; series are merged in sorted
    (metric, node, sub-series) order and aggregated exactly like file input.

    Raises:
        ConfigurationError: step differs from the archive scrape interval
        TransportError, RemoteError: propagated from the client
    """
    expected = expected_step_ms if expected_step_ms is not None else get_settings().SCRAPE_INTERVAL_MS
    if step_ms != expected:
        raise ConfigurationError(
            f"query step {step_ms} ms does not match the scrape interval {expected} ms", "step_ms"
        )
    query_list = [queries] if isinstance(queries, str) else list(queries)
    client = client or MonitoringClient(base_url)

    workers = max(1, min(get_settings().THREADS, len(query_list)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda q: (q, client.query_range(q, start_ms, end_ms, step_ms)), query_list))

    lines = [_series_to_line(series, query) for query, result in results for series in result]
    lines.sort(key=lambda line: (line.metric, line.node, line.instance or ""))
    logger.info("Scraped %d series from %s", len(lines), base_url)
    return MetricArchive.from_records(lines, scrape_interval_ms=step_ms)


_monitoring_client: Optional[MonitoringClient] = None


def get_monitoring_client(base_url: str) -> MonitoringClient:
    """
    Get the shared client for a base URL.

    Returns:
        MonitoringClient: Instance reused while the base URL stays the same.
    """
    global _monitoring_client

    if _monitoring_client is None or _monitoring_client._base_url != base_url.rstrip("/"):
        _monitoring_client = MonitoringClient(base_url)

    return _monitoring_client
