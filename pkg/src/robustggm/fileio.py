"""Deterministic file formats for the command-line tools.

CSV: comma-separated, rows are observations, optional header detected by
a non-numeric first row; missing or malformed cells are rejected, never
imputed.  JSON: floats rendered with 17 significant digits so that
written artifacts round-trip exactly and repeated runs are
byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from pathlib import Path

import numpy as np

from .errors import InputError


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise InputError(f"non-finite number {x!r} in output")
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return format(x, ".17g")


def _emit(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            _emit(str(k), out)
            out.append(":")
            _emit(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else obj
        out.append("[")
        for i, v in enumerate(seq):
            if i:
                out.append(",")
            _emit(v, out)
        out.append("]")
    else:
        raise InputError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    out: list = []
    _emit(obj, out)
    return "".join(out)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj) + "\n")


def write_csv(path, X: np.ndarray) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(X.shape[1])])
        for row in X:
            writer.writerow([_fmt_float(float(v)) for v in row])


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_csv(path) -> np.ndarray:
    """Read an observation matrix; raises InputError with a single-line
    diagnostic on any malformed content."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise InputError(f"{path}: empty file")
    start = 0
    if any(not _is_number(tok) for tok in rows[0]):
        start = 1
        if len(rows) == 1:
            raise InputError(f"{path}: header only, no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise InputError(f"{path}:{i}: expected {width} fields, got {len(row)}")
        for j, tok in enumerate(row):
            tok = tok.strip()
            if tok == "":
                raise InputError(f"{path}:{i}: missing value in column {j + 1}")
            try:
                data[i - start - 1, j] = float(tok)
            except ValueError:
                raise InputError(f"{path}:{i}: bad number {tok!r} in column {j + 1}")
    return data


def write_tsv(path, header: list, rows: list) -> None:
    buf = io.StringIO()
    buf.write("\t".join(header) + "\n")
    for row in rows:
        buf.write(
            "\t".join(
                _fmt_float(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                for v in row
            )
            + "\n"
        )
    Path(path).write_text(buf.getvalue())


def edge_hash(edges) -> str:
    """Stable short hash of a 1-based edge list."""
    canon = ";".join(f"{i},{j}" for i, j in sorted(edges))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
