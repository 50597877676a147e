"""
Persistence of assembled datasets as compressed numpy archives.
"""

import json
from pathlib import Path
from typing import Dict

import numpy as np

from app.core.data.types import Dataset, FeatureTable, NormalizationParams, SequenceTable, Table
from app.core.errors import ConfigurationError, DataIntegrityError

DATASET_FORMAT_VERSION = 1
_PARTS = ("train", "validation", "test")


def _table_arrays(prefix: str, table: Table) -> Dict[str, np.ndarray]:
    return {
        f"{prefix}_X": np.asarray(table.X),
        f"{prefix}_y": np.asarray(table.y),
        f"{prefix}_task_ids": np.array(table.task_ids, dtype=str),
        f"{prefix}_stages": np.asarray(table.stages),
        f"{prefix}_t_starts": np.asarray(table.t_starts),
    }


def save_dataset(dataset: Dataset, path) -> Path:
    """Write all partitions, column names and normalization parameters to one .npz file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sequential = dataset.is_sequential
    header = {
        "format_version": DATASET_FORMAT_VERSION,
        "kind": "sequence" if sequential else "feature",
        "columns": list(dataset.columns),
        "provenance": None if sequential else {m: list(c) for m, c in dataset.train.provenance.items()},
        "params": None,
    }
    arrays: Dict[str, np.ndarray] = {}
    for part in _PARTS:
        arrays.update(_table_arrays(part, getattr(dataset, part)))
    if dataset.params is not None:
        header["params"] = {
            "target_min": dataset.params.target_min,
            "target_max": dataset.params.target_max,
        }
        arrays["params_col_min"] = dataset.params.col_min
        arrays["params_col_max"] = dataset.params.col_max
    arrays["header"] = np.array(json.dumps(header, sort_keys=True))
    with path.open("wb") as handle:
        np.savez_compressed(handle, **arrays)
    return path


def load_dataset(path) -> Dataset:
    """
    Read a dataset written by ``save_dataset``; float arrays round-trip exactly.

    Raises:
        DataIntegrityError: unknown format version
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"file not found: {path}", "dataset")
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != DATASET_FORMAT_VERSION:
            raise DataIntegrityError(f"unsupported dataset format {header.get('format_version')!r}")

        columns = tuple(header["columns"])
        tables = {}
        for part in _PARTS:
            common = dict(
                y=data[f"{part}_y"],
                task_ids=tuple(str(t) for t in data[f"{part}_task_ids"]),
                stages=data[f"{part}_stages"],
                t_starts=data[f"{part}_t_starts"],
            )
            if header["kind"] == "sequence":
                tables[part] = SequenceTable(X=data[f"{part}_X"], metrics=columns, **common)
            else:
                provenance = {m: tuple(c) for m, c in header["provenance"].items()}
                tables[part] = FeatureTable(
                    X=data[f"{part}_X"], columns=columns, provenance=provenance, **common
                )

        params = None
        if header["params"] is not None:
            params = NormalizationParams(
                columns=columns,
                col_min=data["params_col_min"],
                col_max=data["params_col_max"],
                target_min=header["params"]["target_min"],
                target_max=header["params"]["target_max"],
            )
    return Dataset(params=params, **tables)
