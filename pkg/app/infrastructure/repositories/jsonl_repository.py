"""
JSON Lines persistence of metric archives and task logs.

Functions:
    load_metrics / save_metrics: metrics.jsonl <-> MetricArchive
    load_tasks / save_tasks: tasks.jsonl (+ stages.jsonl sidecar) <-> TaskLog
"""

import logging
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.core.data.types import SAMPLING_PERIOD_MS, MetricArchive, StageBoundary, TaskLog, TaskRecord
from app.core.errors import ConfigurationError, ParseError
from app.schemas.records import MetricLine, StageLine, TaskLine

logger = logging.getLogger(__name__)

STAGES_FILENAME = "stages.jsonl"

RecordT = TypeVar("RecordT", bound=BaseModel)


def _first_error(exc: ValidationError) -> str:
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error.get("loc", ())) or "record"
    return f"{location}: {error.get('msg', 'invalid')}"


def _read_records(path: Path, schema: Type[RecordT], field: str) -> Iterator[RecordT]:
    """Yield validated records, raising ParseError with the 1-based line number."""
    if not path.is_file():
        raise ConfigurationError(f"file not found: {path}", field)
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                yield schema.model_validate_json(line)
            except ValidationError as exc:
                raise ParseError(f"{path.name}: {_first_error(exc)}", line_number) from None


def _write_records(path: Path, records: Iterable[BaseModel]) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            handle.write(record.model_dump_json())
            handle.write("\n")
            count += 1
    return count


def load_metrics(path, scrape_interval_ms: int = SAMPLING_PERIOD_MS) -> MetricArchive:
    """
    Load a metrics.jsonl file.

    Per-instance sub-series of one (node, metric) are mean-aggregated.

    Raises:
        ParseError: malformed line (carries the line number)
        DataIntegrityError: duplicate timestamp within one sub-series
    """
    path = Path(path)
    records = list(_read_records(path, MetricLine, "metrics"))
    if not records:
        logger.warning("Metric file %s is empty", path)
    archive = MetricArchive.from_records(records, scrape_interval_ms=scrape_interval_ms)
    logger.info("Loaded %d metric series from %s", len(archive), path)
    return archive


def save_metrics(archive: MetricArchive, path, records: Optional[Iterable[MetricLine]] = None) -> int:
    """
    Write metric lines; by default the archive's aggregated series.

    Returns:
        Number of lines written
    """
    return _write_records(Path(path), records if records is not None else archive.to_records())


def load_stages(path) -> List[StageBoundary]:
    return [
        StageBoundary(s.node, s.stage, s.start_ms, s.end_ms, s.forced)
        for s in _read_records(Path(path), StageLine, "stages")
    ]


def load_tasks(path, stages_path=None) -> TaskLog:
    """
    Load a tasks.jsonl file and, if present, its stages.jsonl sidecar.

    Raises:
        ParseError: malformed line or t_end <= t_start
        DataIntegrityError: duplicate task ids
    """
    path = Path(path)
    records = [
        TaskRecord(
            task_id=line.task_id,
            app_id=line.app,
            node_id=line.node,
            t_start=line.t_start_ms,
            t_end=line.t_end_ms,
            stage=line.stage,
        )
        for line in _read_records(path, TaskLine, "tasks")
    ]
    if not records:
        logger.warning("Task file %s is empty", path)

    sidecar = Path(stages_path) if stages_path is not None else path.with_name(STAGES_FILENAME)
    stages = load_stages(sidecar) if sidecar.is_file() else []
    log = TaskLog(records=tuple(records), stages=tuple(stages))
    logger.info("Loaded %d tasks in %d groups from %s", len(log), len(log.groups()), path)
    return log


def save_tasks(log: TaskLog, path, stages_path=None) -> int:
    """Write tasks.jsonl and, when the log has stage annotations, stages.jsonl next to it."""
    path = Path(path)
    count = _write_records(
        path,
        (
            TaskLine(
                task_id=r.task_id,
                app=r.app_id,
                node=r.node_id,
                t_start_ms=r.t_start,
                t_end_ms=r.t_end,
                stage=r.stage,
            )
            for r in log.records
        ),
    )
    if log.stages:
        sidecar = Path(stages_path) if stages_path is not None else path.with_name(STAGES_FILENAME)
        _write_records(
            sidecar,
            (
                StageLine(node=s.node_id, stage=s.stage_id, start_ms=s.start_ms, end_ms=s.end_ms, forced=s.forced)
                for s in log.stages
            ),
        )
    return count
