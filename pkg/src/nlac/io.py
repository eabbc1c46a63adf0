"""File formats owned by the harness: field dumps, run logs and rate tables.

Field dump format (diff-able, exact round-trip):

    nlac-field v1 N=<int> X=<real> t=<real>
    <N lines of N space-separated 17-significant-digit decimals>

where line i holds the nodes with x = i*h. CSV schemas:

    runlog.csv  t,max_norm,energy,increment_rate
    rates.csv   param,error,rate        (rate empty on the first row)
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .diagnostics import RateTable, RunLog
from .operator import Field, Grid

FIELD_DUMP_MAGIC = "nlac-field v1"


def write_text_atomic(path: Path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def field_dump_text(field: Field, t: float) -> str:
    header = f"{FIELD_DUMP_MAGIC} N={field.grid.n} X={field.grid.extent:.17g} t={t:.17g}"
    rows = [" ".join(f"{v:.17g}" for v in row) for row in field.values]
    return header + "\n" + "\n".join(rows) + "\n"


def parse_field_dump(text: str) -> tuple[Field, float]:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty field dump")
    head = lines[0].split()
    if " ".join(head[:2]) != FIELD_DUMP_MAGIC:
        raise ValueError(f"bad field dump header: {lines[0]!r}")
    meta = dict(part.split("=", 1) for part in head[2:])
    n = int(meta["N"])
    extent = float(meta["X"])
    t = float(meta["t"])
    if len(lines) < n + 1:
        raise ValueError(f"field dump truncated: expected {n} rows, found {len(lines) - 1}")
    values = np.array([[float(v) for v in lines[1 + i].split()] for i in range(n)])
    return Field(Grid(n, extent), values), t


def runlog_csv_text(log: RunLog) -> str:
    lines = ["t,max_norm,energy,increment_rate"]
    for rec in log.records:
        lines.append(f"{rec.t!r},{rec.max_norm!r},{rec.energy!r},{rec.increment_rate!r}")
    return "\n".join(lines) + "\n"


def rates_csv_text(table: RateTable) -> str:
    lines = ["param,error,rate"]
    for row in table.rows:
        rate = "" if row.rate is None else repr(row.rate)
        lines.append(f"{row.param!r},{row.error!r},{rate}")
    return "\n".join(lines) + "\n"
