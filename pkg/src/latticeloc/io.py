"""Deterministic CSV and JSON report writing.

Every float is printed with 17 significant digits so that identical inputs
produce byte-identical files.  Non-finite floats become the strings
``"inf"``, ``"-inf"`` and ``"nan"`` in JSON (which has no literal for them).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
FORMATS = ("csv", "json", "both")


@dataclass
class Table:
    """Column-oriented numeric table destined for one CSV file."""

    columns: tuple
    rows: list

    @classmethod
    def from_columns(cls, **cols) -> "Table":
        arrays = [np.asarray(v).ravel() for v in cols.values()]
        n = {a.size for a in arrays}
        if len(n) > 1:
            raise ValueError(f"columns have unequal lengths {sorted(n)}")
        return cls(tuple(cols), [tuple(r) for r in zip(*arrays)])

    def to_json(self) -> dict:
        return {c: [r[i] for r in self.rows] for i, c in enumerate(self.columns)}


@dataclass
class Report:
    """Result of one subcommand: a JSON record plus zero or more tables."""

    name: str
    record: dict
    tables: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    s = "%.17g" % x
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to plain Python containers."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj, indent: int) -> str:
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        s = format_float(obj)
        return s if math.isfinite(obj) else json.dumps(s)
    return json.dumps(obj)


def dumps(obj) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _encode(_plain(obj), 0) + "\n"


def json_payload(report: Report) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": report.name,
        "result": report.record,
        "checks": report.checks,
        "tables": {name: t.to_json() for name, t in report.tables.items()},
    }


def _csv_cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def _flatten(record: dict, prefix: str = ""):
    for k, v in record.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def write_csv(path: Path, table: Table) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_csv_cell(v) for v in row])
    return path


def write_report(report: Report, out_dir, fmt: str = "both") -> list[Path]:
    """Write ``<name>.json`` and/or one ``<name>_<table>.csv`` per table.

    CSV output also gets ``<name>_summary.csv`` with the flattened record as
    ``key,value`` rows so that both formats carry the same numbers.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    if fmt in ("json", "both"):
        path = out / f"{report.name}.json"
        path.write_text(dumps(json_payload(report)))
        written.append(path)
    if fmt in ("csv", "both"):
        for name, table in report.tables.items():
            written.append(write_csv(out / f"{report.name}_{name}.csv", table))
        summary = Table(("key", "value"), list(_flatten({**report.record, "checks": report.checks})))
        written.append(write_csv(out / f"{report.name}_summary.csv", summary))
    return written
