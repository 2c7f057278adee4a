"""Curve CSV files.

Layout: optional ``#`` comment lines, a header ``t,t_1,...,t_m`` carrying the
uniform grid, then one ``<id>,v_1,...,v_m`` row per curve. Observation files
use the same layout with raw measurements.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InputFormatError
from .grid import Grid

_GRID_TOL = 1e-9


def fmt(x: float) -> str:
    return repr(float(x))


def read_curve_csv(path) -> tuple:
    """Return (grid, values (n x m), ids, comments)."""
    text = Path(path).read_text()
    comments = []
    grid = None
    ids, rows = [], []
    for lineno, fields in _numbered_rows(text):
        if fields and fields[0].lstrip().startswith("#"):
            if grid is None:
                comments.append(",".join(fields).lstrip("# ").strip())
            continue
        if not fields or all(not f.strip() for f in fields):
            continue
        if grid is None:
            grid = _parse_header(fields, lineno)
            continue
        if len(fields) != grid.m + 1:
            raise InputFormatError(
                f"expected an id and {grid.m} values, found {len(fields)} fields", lineno)
        try:
            vals = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise InputFormatError(f"non-numeric value ({exc})", lineno) from None
        if not np.all(np.isfinite(vals)):
            raise InputFormatError("non-finite value", lineno)
        ids.append(fields[0].strip())
        rows.append(vals)
    if grid is None:
        raise InputFormatError("missing header row 't,<t_1>,...,<t_m>'", 1)
    if not rows:
        raise InputFormatError("no curve rows after the header")
    return grid, np.array(rows), tuple(ids), comments


def _numbered_rows(text: str):
    reader = csv.reader(io.StringIO(text))
    for fields in reader:
        yield reader.line_num, fields


def _parse_header(fields: Sequence[str], lineno: int) -> Grid:
    if fields[0].strip() != "t":
        raise InputFormatError("header must start with 't'", lineno)
    try:
        t = np.array([float(f) for f in fields[1:]])
    except ValueError:
        raise InputFormatError("non-numeric design point in header", lineno) from None
    if t.size < 3:
        raise InputFormatError(f"need at least 3 design points, found {t.size}", lineno)
    grid = Grid(t.size)
    if np.max(np.abs(t - grid.points)) > _GRID_TOL:
        raise InputFormatError("design points must be uniform on [0, 1]", lineno)
    return grid


def write_curve_csv(path, grid: Grid, values: np.ndarray, ids: Optional[Iterable[str]] = None,
                    comments: Sequence[str] = ()) -> None:
    values = np.atleast_2d(values)
    ids = list(ids) if ids is not None else [f"curve_{i}" for i in range(values.shape[0])]
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(["t"] + [fmt(t) for t in grid.points]))
    for cid, row in zip(ids, values):
        lines.append(",".join([cid] + [fmt(v) for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_labels_csv(path, ids: Sequence[str], labels: Sequence[int],
                     comments: Sequence[str] = ()) -> None:
    lines = [f"# {c}" for c in comments] + ["id,label"]
    lines += [f"{cid},{int(lab)}" for cid, lab in zip(ids, labels)]
    Path(path).write_text("\n".join(lines) + "\n")
