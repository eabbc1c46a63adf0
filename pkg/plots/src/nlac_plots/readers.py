"""Strict parsers for the solver's output files.

No column inference, no recovery: the file either matches the documented
schema exactly or parsing fails with the offending line number, so format
drift is caught from both sides of the pipeline.

Formats:

    field dump   header "nlac-field v1 N=<int> X=<real> t=<real>",
                 then N lines of N space-separated decimals
    runlog.csv   header "t,max_norm,energy,increment_rate", float rows
    rates.csv    header "param,error,rate", rate may be empty
    jumps.csv    header "delta,predicted,measured,t_measured,reached_steady"
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELD_MAGIC = ("nlac-field", "v1")
RUNLOG_HEADER = "t,max_norm,energy,increment_rate"
RATES_HEADER = "param,error,rate"
JUMPS_HEADER = "delta,predicted,measured,t_measured,reached_steady"


class SchemaError(ValueError):
    """Input does not match the documented schema."""

    def __init__(self, path, lineno: int, message: str):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


def _float(path, lineno: int, token: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise SchemaError(path, lineno, f"bad {what}: {token!r}") from None
    if not math.isfinite(value):
        raise SchemaError(path, lineno, f"non-finite {what}: {token!r}")
    return value


@dataclass(frozen=True)
class FieldDump:
    n: int
    extent: float
    t: float
    values: np.ndarray  # (n, n), row i is x = i*h

    def node_coordinates(self) -> np.ndarray:
        return np.arange(self.n) * (self.extent / self.n)


def read_field_dump(path) -> FieldDump:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(path, 1, "empty file")
    head = lines[0].split()
    if tuple(head[:2]) != FIELD_MAGIC or len(head) != 5:
        raise SchemaError(path, 1, f"expected 'nlac-field v1 N=.. X=.. t=..', got {lines[0]!r}")
    meta = {}
    for part in head[2:]:
        if "=" not in part:
            raise SchemaError(path, 1, f"malformed header field {part!r}")
        key, raw = part.split("=", 1)
        meta[key] = raw
    for key in ("N", "X", "t"):
        if key not in meta:
            raise SchemaError(path, 1, f"header misses {key}=")
    try:
        n = int(meta["N"])
    except ValueError:
        raise SchemaError(path, 1, f"bad N: {meta['N']!r}") from None
    extent = _float(path, 1, meta["X"], "X")
    t = _float(path, 1, meta["t"], "t")
    if len(lines) != n + 1:
        raise SchemaError(path, len(lines) + 1,
                          f"expected exactly {n} data rows, found {len(lines) - 1}")
    values = np.empty((n, n))
    for i in range(n):
        tokens = lines[1 + i].split()
        if len(tokens) != n:
            raise SchemaError(path, 2 + i, f"expected {n} values, found {len(tokens)}")
        for j, token in enumerate(tokens):
            values[i, j] = _float(path, 2 + i, token, "value")
    return FieldDump(n=n, extent=extent, t=t, values=values)


def rewrite_field_dump(dump: FieldDump) -> str:
    """Canonical text form; byte-identical round trip for solver-written dumps."""
    header = f"nlac-field v1 N={dump.n} X={dump.extent:.17g} t={dump.t:.17g}"
    rows = [" ".join(f"{v:.17g}" for v in row) for row in dump.values]
    return header + "\n" + "\n".join(rows) + "\n"


def _read_csv(path, header: str, allow_empty: dict[int, bool]):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaError(path, 1, "empty file")
    if lines[0] != header:
        raise SchemaError(path, 1, f"expected header {header!r}, got {lines[0]!r}")
    columns = header.split(",")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split(",")
        if len(tokens) != len(columns):
            raise SchemaError(path, lineno,
                              f"expected {len(columns)} columns, found {len(tokens)}")
        row = []
        for idx, token in enumerate(tokens):
            if token == "" and allow_empty.get(idx, False):
                row.append(None)
            else:
                row.append(_float(path, lineno, token, columns[idx]))
        rows.append(tuple(row))
    return rows


def read_runlog(path):
    """Rows of (t, max_norm, energy, increment_rate)."""
    rows = _read_csv(path, RUNLOG_HEADER, allow_empty={})
    for lineno, (t, *_rest) in enumerate(rows[1:], start=3):
        if t <= rows[lineno - 3][0]:
            raise SchemaError(path, lineno, "t must increase strictly")
    return rows


def read_rates(path):
    """Rows of (param, error, rate-or-None)."""
    return _read_csv(path, RATES_HEADER, allow_empty={2: True})


def read_jumps(path):
    """Rows of (delta, predicted-or-None, measured, t_measured, reached_steady)."""
    return _read_csv(path, JUMPS_HEADER, allow_empty={1: True})
