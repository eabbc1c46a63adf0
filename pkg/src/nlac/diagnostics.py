"""Norms, discrete energy, jump measurement and convergence-rate tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import NamedTuple, Sequence

import numpy as np
import scipy.fft as _fft

from .operator import Field, Stencil, apply_direct


class StepRecord(NamedTuple):
    t: float
    max_norm: float
    energy: float
    increment_rate: float


@dataclass
class RunLog:
    """Per-step diagnostics plus the metadata needed to reproduce the run."""

    records: list[StepRecord] = dataclass_field(default_factory=list)
    metadata: dict = dataclass_field(default_factory=dict)

    def append(self, record: StepRecord) -> None:
        if not all(math.isfinite(v) for v in record):
            raise ValueError(f"run log entries must be finite, got {record}")
        if self.records and record.t <= self.records[-1].t:
            raise ValueError(
                f"run log times must increase: {record.t} after {self.records[-1].t}"
            )
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.records])


class RateRow(NamedTuple):
    param: float
    error: float
    rate: float | None


@dataclass
class RateTable:
    rows: list[RateRow]

    @property
    def rates(self) -> list[float]:
        return [row.rate for row in self.rows if row.rate is not None]


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, Field) else np.asarray(u)


def max_norm(u) -> float:
    """Largest absolute nodal value."""
    return float(np.max(np.abs(_values(u))))


def discrete_energy(u: Field, stencil: Stencil, eps: float) -> float:
    """Discrete free energy: double-well sum minus (eps^2/2) <u, D u>.

    Plain unweighted nodal sums; this is the quantity the steppers are
    energy-stable for. See physical_energy for the mesh-weighted variant
    used in plots.
    """
    well = 0.25 * float(np.sum((u.values ** 2 - 1.0) ** 2))
    quad = float(np.sum(u.values * apply_direct(stencil, u).values))
    return well - 0.5 * eps ** 2 * quad


def spectral_energy(values: np.ndarray, diffusion_symbol: np.ndarray, eps: float) -> float:
    """Same energy with the quadratic term summed in Fourier space (Parseval).

    Equivalent to the direct form to roundoff; needed when the stencil is too
    wide for direct application.
    """
    well = 0.25 * float(np.sum((values ** 2 - 1.0) ** 2))
    spectrum = _fft.fft2(values)
    quad = float(np.sum(diffusion_symbol * (spectrum.real ** 2 + spectrum.imag ** 2)))
    quad /= values.size
    return well - 0.5 * eps ** 2 * quad


def physical_energy(u: Field, stencil: Stencil, eps: float) -> float:
    """Mesh-weighted energy h^2 * E; comparable across resolutions, never asserted on."""
    return u.grid.spacing ** 2 * discrete_energy(u, stencil, eps)


def measure_jump(u: Field, row: int | None = None) -> float:
    """Largest nodal increment along a fixed-y cross section (periodic wrap included).

    row is the y index of the section; defaults to the row nearest y = X/2.
    Meaningful once the state is steady, which is the caller's business.
    """
    if row is None:
        row = u.grid.n // 2
    section = u.values[:, row]
    return float(np.max(np.abs(np.diff(section, append=section[0]))))


def rate_table(pairs: Sequence[tuple[float, float]]) -> RateTable:
    """Errors against a resolution parameter, with log-ratio convergence rates.

    For a halving parameter sequence the rate is log2(e_prev / e_cur), as in
    the usual refinement tables; otherwise the generalized two-point slope
    log(e_prev/e_cur) / log(p_prev/p_cur) is used.
    """
    rows: list[RateRow] = []
    prev: tuple[float, float] | None = None
    for param, error in pairs:
        if not error > 0.0:
            raise ValueError(f"rate table needs positive errors, got {error} at {param}")
        if prev is not None and not param < prev[0]:
            raise ValueError("rate table parameters must decrease strictly")
        if prev is None:
            rows.append(RateRow(param, error, None))
        else:
            ratio = prev[0] / param
            if abs(ratio - 2.0) <= 1e-9:
                rate = math.log2(prev[1] / error)
            else:
                rate = math.log(prev[1] / error) / math.log(ratio)
            rows.append(RateRow(param, error, rate))
        prev = (param, error)
    return RateTable(rows)
