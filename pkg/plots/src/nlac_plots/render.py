"""Figure rendering from parsed solver outputs.

Five figure kinds mirroring the usual phase-field reporting: phase
snapshots, maximum-norm and energy histories, interface cross-sections with
jump annotations, and log-log convergence-rate plots. Rendering is
deterministic (fixed size, fixed metadata) and never touches the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .readers import read_field_dump, read_rates, read_runlog

FIGURE_KINDS = ("snapshot", "norms", "energy", "cross-section", "rates")

_SAVE_OPTS = dict(dpi=110, metadata={"Software": "nlac-plots"})


@dataclass(frozen=True)
class PlotJob:
    kind: str
    input_path: Path
    output_path: Path
    row: int | None = None              # cross-section only
    predicted_jump: float | None = None  # cross-section only
    title: str | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {', '.join(FIGURE_KINDS)}")


@dataclass(frozen=True)
class RenderResult:
    output_path: Path
    measured_jump: float | None = None
    predicted_jump: float | None = None


def _new_axes(title):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if title:
        ax.set_title(title)
    return fig, ax


def _save(fig, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def _render_snapshot(job: PlotJob) -> RenderResult:
    dump = read_field_dump(job.input_path)
    fig, ax = _new_axes(job.title or f"phase field at t = {dump.t:g}")
    image = ax.imshow(dump.values.T, origin="lower",
                      extent=(0.0, dump.extent, 0.0, dump.extent),
                      cmap="coolwarm", vmin=-1.0, vmax=1.0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.colorbar(image, ax=ax, label="u")
    _save(fig, job.output_path)
    return RenderResult(job.output_path)


def _render_history(job: PlotJob, column: int, label: str) -> RenderResult:
    rows = read_runlog(job.input_path)
    times = [row[0] for row in rows]
    series = [row[column] for row in rows]
    fig, ax = _new_axes(job.title or label)
    ax.plot(times, series, lw=1.2)
    if column == 1:
        ax.axhline(1.0, color="gray", ls="--", lw=0.8, label="max principle bound")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    _save(fig, job.output_path)
    return RenderResult(job.output_path)


def measure_section_jump(section: np.ndarray) -> float:
    """Largest nodal increment along the section, periodic wrap included."""
    return float(np.max(np.abs(np.diff(section, append=section[0]))))


def _render_cross_section(job: PlotJob) -> RenderResult:
    dump = read_field_dump(job.input_path)
    row = dump.n // 2 if job.row is None else job.row
    if not 0 <= row < dump.n:
        raise ValueError(f"cross-section row {row} outside [0, {dump.n})")
    section = dump.values[:, row]
    xs = dump.node_coordinates()
    measured = measure_section_jump(section)
    fig, ax = _new_axes(job.title or
                        f"cross-section at y = {row * dump.extent / dump.n:.4g}, "
                        f"t = {dump.t:g}")
    ax.plot(xs, section, lw=1.0, marker=".", ms=2.5)
    note = f"measured jump {measured:.6f}"
    if job.predicted_jump is not None:
        mid = 0.5 * (float(section.min()) + float(section.max()))
        ax.axhspan(mid - 0.5 * job.predicted_jump, mid + 0.5 * job.predicted_jump,
                   color="orange", alpha=0.2,
                   label=f"predicted jump {job.predicted_jump:.6f}")
        ax.legend(loc="best", fontsize=8)
        note += f" vs predicted {job.predicted_jump:.6f}"
    ax.annotate(note, xy=(0.02, 0.02), xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    _save(fig, job.output_path)
    return RenderResult(job.output_path, measured_jump=measured,
                        predicted_jump=job.predicted_jump)


def _render_rates(job: PlotJob) -> RenderResult:
    rows = read_rates(job.input_path)
    params = [row[0] for row in rows]
    errors = [row[1] for row in rows]
    fig, ax = _new_axes(job.title or "convergence")
    ax.loglog(params, errors, marker="o", lw=1.0, label="error")
    if len(params) >= 2:
        # dashed second-order reference anchored at the first point
        ref = [errors[0] * (p / params[0]) ** 2 for p in params]
        ax.loglog(params, ref, ls="--", lw=0.8, color="gray", label="slope 2")
        rates = [row[2] for row in rows if row[2] is not None]
        if rates:
            ax.annotate(f"final rate {rates[-1]:.3f}", xy=(0.02, 0.02),
                        xycoords="axes fraction", fontsize=8)
    ax.set_xlabel("resolution parameter")
    ax.set_ylabel("max-norm error")
    ax.legend(loc="best", fontsize=8)
    _save(fig, job.output_path)
    return RenderResult(job.output_path)


def render(job: PlotJob) -> RenderResult:
    """Render one figure; returns what was drawn (incl. jump numbers)."""
    if job.kind == "snapshot":
        return _render_snapshot(job)
    if job.kind == "norms":
        return _render_history(job, column=1, label="max |u|")
    if job.kind == "energy":
        return _render_history(job, column=2, label="discrete energy")
    if job.kind == "cross-section":
        return _render_cross_section(job)
    return _render_rates(job)
