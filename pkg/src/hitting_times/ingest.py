"""Edge lists to degree sequences, and CSV persistence of result tables."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

import numpy as np


class EdgeListError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TableError(ValueError):
    pass


@dataclass
class DegreeSequence:
    degrees: np.ndarray
    node_ids: np.ndarray
    source_label: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return int(self.degrees.size)


def parse_edge_list(stream: Union[TextIO, Iterable[str]], source_label: str = "") -> DegreeSequence:
    """Undirected distinct-neighbour degrees from a whitespace edge list.

    Lines starting with ``#`` and blank lines are skipped.  Directed input is
    symmetrised, self-loops are dropped (the node still counts, with whatever
    degree its other edges give), and repeated edges count once.  Nodes are
    listed in order of first appearance in the file.
    """
    neighbours: dict[int, set] = {}
    for lineno, line in enumerate(stream, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise EdgeListError(lineno, f"expected two node ids, got {len(parts)} fields")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(lineno, f"node ids must be integers: {s!r}") from None
        if a < 0 or b < 0:
            raise EdgeListError(lineno, "node ids must be non-negative")
        na = neighbours.setdefault(a, set())
        nb = neighbours.setdefault(b, set())
        if a != b:
            na.add(b)
            nb.add(a)
    ids = np.fromiter(neighbours.keys(), dtype=np.int64, count=len(neighbours))
    degrees = np.fromiter((len(v) for v in neighbours.values()), dtype=np.int64, count=len(neighbours))
    meta = {"orientation": "symmetrized", "order": "first appearance in file"}
    return DegreeSequence(degrees, ids, source_label, meta)


def read_edge_list(path: Union[str, Path]) -> DegreeSequence:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh, source_label=Path(path).stem)


# -- tables -------------------------------------------------------------------


@dataclass
class ExperimentTable:
    """Named numeric columns of equal length plus free-form metadata."""

    columns: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = {}
        length = None
        for name, values in self.columns.items():
            arr = np.asarray(values)
            if arr.dtype.kind == "b":
                arr = arr.astype(np.int64)
            if arr.dtype.kind not in "iuf" or arr.ndim != 1:
                raise TableError(f"column {name!r} must be a 1-d numeric array")
            if length is None:
                length = arr.size
            elif arr.size != length:
                raise TableError(f"column {name!r} has {arr.size} rows, expected {length}")
            if any(ch in str(name) for ch in ',"\r\n'):
                raise TableError(f"column name {name!r} may not contain commas, quotes or newlines")
            cols[str(name)] = arr
        if len(cols) != len(self.columns):
            raise TableError("column names must be unique")
        self.columns = cols

    @property
    def names(self) -> list:
        return list(self.columns)

    def __len__(self) -> int:
        return next(iter(self.columns.values())).size if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def _format_column(arr: np.ndarray) -> list:
    if arr.dtype.kind in "iu":
        return list(map(str, arr.tolist()))
    if not np.all(np.isfinite(arr)):
        raise TableError("tables must hold finite values (NaN or inf found)")
    out = list(map("%.17g".__mod__, arr.tolist()))
    # integral values below 1e17 print without '.' or exponent; mark them as floats
    for i in np.flatnonzero((arr == np.floor(arr)) & (np.abs(arr) < 1e17)).tolist():
        out[i] += ".0"
    return out


def _json_safe(obj):
    """Non-finite floats become strings so the sidecar stays standard JSON."""
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def meta_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_table(path: Union[str, Path], table: ExperimentTable) -> Path:
    """Write ``table`` as CSV plus a ``<name>.meta.json`` sidecar with the metadata."""
    path = Path(path)
    cells = [_format_column(table.columns[name]) for name in table.names]
    lines = [",".join(table.names)]
    lines.extend(map(",".join, zip(*cells)))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = dict(table.metadata)
    meta["columns"] = {n: ("int" if table.columns[n].dtype.kind in "iu" else "float") for n in table.names}
    meta_path(path).write_text(json.dumps(_json_safe(meta), indent=2, sort_keys=True, default=str, allow_nan=False) + "\n", encoding="utf-8")
    return path


def read_table(path: Union[str, Path]) -> ExperimentTable:
    """Read a CSV written by ``write_table``; column types come from the sidecar
    when present, otherwise a column is integer iff every cell parses as one."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TableError(f"{path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise TableError(f"{path}: missing header row")
    header = next(csv.reader([lines[0]]))
    if len(set(header)) != len(header):
        raise TableError(f"{path}: duplicate column names")
    # numeric cells never need CSV quoting, so plain splitting is exact
    body = [line for line in lines[1:] if line]
    ncol = len(header)
    flat = ",".join(body).split(",") if body else []
    if len(flat) != ncol * len(body):
        for lineno, line in enumerate(lines[1:], start=2):
            if line and line.count(",") != ncol - 1:
                raise TableError(f"{path}:{lineno}: expected {ncol} fields, got {line.count(',') + 1}")
    raw = [flat[i::ncol] for i in range(ncol)]
    meta = {}
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
    types = meta.pop("columns", {})
    columns = {}
    for name, cells in zip(header, raw):
        kind = types.get(name) or ("int" if all(_is_int(c) for c in cells) and cells else "float")
        try:
            columns[name] = np.array(cells, dtype=np.int64 if kind == "int" else np.float64)
        except ValueError as exc:
            raise TableError(f"{path}: column {name!r}: {exc}") from exc
    return ExperimentTable(columns, meta)


def _is_int(cell: str) -> bool:
    try:
        int(cell)
    except ValueError:
        return False
    return True


def degree_table(seq: DegreeSequence) -> ExperimentTable:
    return ExperimentTable(
        {"node": seq.node_ids, "degree": seq.degrees},
        {"source": seq.source_label, **seq.metadata},
    )


__all__ = [
    "DegreeSequence",
    "EdgeListError",
    "ExperimentTable",
    "TableError",
    "degree_table",
    "meta_path",
    "parse_edge_list",
    "read_edge_list",
    "read_table",
    "write_table",
]
