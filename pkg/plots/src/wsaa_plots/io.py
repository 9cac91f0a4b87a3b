"""Readers for the experiment output schemas (records.csv, summary.json).

Inputs are never modified. Unknown schema versions and empty record sets
are rejected with typed errors so a figure is never silently rendered
from data the package does not understand.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

SUPPORTED_SCHEMA = 1

__all__ = ["NoDataError", "SchemaVersionError", "load_records", "load_summary"]


class NoDataError(ValueError):
    """Missing input file or an empty record set."""


class SchemaVersionError(ValueError):
    """The input carries a schema version this package does not know."""


_FLOAT_COLUMNS = (
    "grid_value", "estimate", "f_star", "half_width", "lower", "upper",
    "optimization_error", "statistical_error", "pivot", "elapsed_ms",
)
_INT_COLUMNS = ("rep_id", "n", "m", "solver_iterations", "covered", "failed")


def load_records(path) -> list[dict]:
    """Parse records.csv into typed row dicts (failed rows included)."""
    path = Path(path)
    if not path.exists():
        raise NoDataError(f"records file not found: {path}")
    with path.open("r", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise NoDataError(f"records file has no rows: {path}")
    version = rows[0].get("schema_version")
    if version is None or int(float(version)) != SUPPORTED_SCHEMA:
        raise SchemaVersionError(
            f"records schema_version {version!r} unsupported (need {SUPPORTED_SCHEMA})")
    out = []
    for row in rows:
        parsed = dict(row)
        for col in _FLOAT_COLUMNS:
            parsed[col] = float(row[col]) if row[col] != "" else float("nan")
        for col in _INT_COLUMNS:
            parsed[col] = int(float(row[col]))
        out.append(parsed)
    return out


def load_summary(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise NoDataError(f"summary file not found: {path}")
    summary = json.loads(path.read_text(encoding="utf-8"))
    if summary.get("schema_version") != SUPPORTED_SCHEMA:
        raise SchemaVersionError(
            f"summary schema_version {summary.get('schema_version')!r} unsupported "
            f"(need {SUPPORTED_SCHEMA})")
    if not summary.get("points"):
        raise NoDataError(f"summary has no grid points: {path}")
    return summary


def pivots_at(records: list[dict], grid_value: float | None = None) -> np.ndarray:
    """Studentized pivot values at one grid point (default: the largest)."""
    ok = [r for r in records if not r["failed"]]
    if not ok:
        raise NoDataError("no successful replications in the record set")
    if grid_value is None:
        grid_value = max(r["grid_value"] for r in ok)
    vals = np.array([r["pivot"] for r in ok if r["grid_value"] == grid_value])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise NoDataError(f"no pivot values at grid point {grid_value}")
    return vals
