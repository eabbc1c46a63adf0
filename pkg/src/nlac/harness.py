"""Experiment orchestration: configuration, initial states, and the studies.

Configuration is a flat ``key = value`` UTF-8 text format with ``#``
comments. Unknown keys are errors, which catches typos in parameter sweeps.
Every experiment writes a ``metadata.txt`` echo of its fully resolved
configuration into the output directory; feeding that file back through
``--config`` reproduces the run bit for bit on the same build.

The random number generator is numpy's PCG64, seeded from the 64-bit
``seed`` key and recorded in the metadata.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import RateTable, measure_jump, rate_table
from .etd import RunResult, TimePlan, lac_symbol, run
from .io import field_dump_text, rates_csv_text, runlog_csv_text, write_text_atomic
from .kernels import KernelSpec, predicted_jump
from .operator import (Grid, Field, build_stencil, sample_function,
                       stencil_for_spacing, write_stencil_text)
from .spectral import ModelParams, SpectralOperator, build_symbol, set_fft_workers

RNG_ALGORITHM = "numpy-pcg64"

EXPERIMENTS = ("run", "convergence-time", "convergence-space", "convergence-delta",
               "stability", "bubble", "coeffs")


class ConfigError(ValueError):
    """Bad configuration file or flag value."""


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(",") if part.strip())


def _parse_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(part) for part in raw.split(",") if part.strip())


def _choice(options):
    def parse(raw: str) -> str:
        value = raw.strip().lower()
        if value not in options:
            raise ConfigError(f"expected one of {', '.join(options)}, got {raw!r}")
        return value
    return parse


# key -> parser; None defaults are resolved per experiment
_KEY_PARSERS = {
    "experiment": _choice(EXPERIMENTS),
    "alpha": float,
    "delta": float,
    "eps": float,
    "kappa": float,
    "n": int,
    "extent": float,
    "tau": float,
    "t_end": float,
    "scheme": _choice(("etd1", "etdrk2")),
    "model": _choice(("nac", "lac")),
    "ic": _choice(("sine", "random", "bubble")),
    "ic_amplitude": float,
    "bubble_radius": float,
    "bubble_width": float,
    "seed": int,
    "threads": int,
    "steady_tol": float,
    "sample_stride": int,
    "snapshot_times": _parse_floats,
    "quad_order": int,
    "quad_check_tol": float,
    "allow_small_kappa": _parse_bool,
    "alpha_list": _parse_floats,
    "delta_list": _parse_floats,
    "tau_base": float,
    "tau_levels": int,
    "benchmark_refinement": int,
    "n_list": _parse_ints,
    "n_benchmark": int,
    "delta_base": float,
    "delta_levels": int,
    "spacing": float,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "run"
    alpha: float = 1.0
    delta: float = 2.0
    eps: float = 0.1
    kappa: float = 2.0
    n: int | None = None
    extent: float = 2.0 * math.pi
    tau: float | None = None
    t_end: float | None = None
    scheme: str = "etdrk2"
    model: str = "nac"
    ic: str = "sine"
    ic_amplitude: float | None = None
    bubble_radius: float | None = None
    bubble_width: float | None = None
    seed: int = 20180409
    threads: int = 1
    steady_tol: float | None = None
    sample_stride: int | None = None
    snapshot_times: tuple[float, ...] = ()
    quad_order: int = 16
    quad_check_tol: float | None = None
    allow_small_kappa: bool = False
    alpha_list: tuple[float, ...] = (1.0, 3.0)
    delta_list: tuple[float, ...] = ()
    tau_base: float = 0.05
    tau_levels: int = 6
    benchmark_refinement: int = 64
    n_list: tuple[int, ...] = (16, 32, 64, 128, 256)
    n_benchmark: int = 512
    delta_base: float = 0.2
    delta_levels: int = 4
    spacing: float | None = None


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value format; '#' starts a comment anywhere."""
    mapping = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, raw_value = (part.strip() for part in line.split("=", 1))
        mapping[key] = raw_value
    return mapping


def coerce_value(key: str, raw):
    if key not in _KEY_PARSERS:
        raise ConfigError(f"unknown configuration key {key!r}")
    if not isinstance(raw, str):
        return raw
    try:
        return _KEY_PARSERS[key](raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    values = {key: coerce_value(key, raw) for key, raw in mapping.items()}
    return ExperimentConfig(**values)


def config_text(cfg: ExperimentConfig, comments: tuple[str, ...] = ()) -> str:
    """Re-launchable echo of a configuration; extra facts go in comments."""
    lines = [f"# nlac {__version__} experiment metadata (re-launchable config)"]
    lines += [f"# {comment}" for comment in comments]
    lines.append(f"# rng = {RNG_ALGORITHM}")
    for field in dataclasses.fields(cfg):
        value = getattr(cfg, field.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            if not value:
                continue
            value = ",".join(f"{v:g}" for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = f"{value:.17g}"
        lines.append(f"{field.name} = {value}")
    return "\n".join(lines) + "\n"


# per-experiment defaults for fields left unset
_RESOLVE = {
    "run": dict(n=256, tau=0.01, t_end=0.5),
    "convergence-time": dict(n=128, t_end=0.5, delta_list=(0.2, 2.0)),
    "convergence-space": dict(t_end=0.5),
    "convergence-delta": dict(n=512, t_end=0.5),
    "stability": dict(n=512, tau=0.01, t_end=180.0,
                      steady_tol=1e-8, snapshot_times=(6.0, 14.0, 50.0, 180.0)),
    # the default bubble (radius X/4) under near-local horizons collapses by
    # curvature flow around t ~ R0^2/(2 eps^2) ~ 123; leave headroom past that
    "bubble": dict(n=512, tau=0.01, t_end=160.0,
                   steady_tol=1e-8, delta_list=(0.2, 0.8, 1.6, 3.2)),
    "coeffs": dict(n=64),
}


def resolve_config(cfg: ExperimentConfig, experiment: str) -> ExperimentConfig:
    """Fill the fields the experiment needs but the user left unset."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    updates = {"experiment": experiment}
    for key, value in _RESOLVE.get(experiment, {}).items():
        current = getattr(cfg, key)
        if current is None or (isinstance(value, tuple) and current == ()):
            updates[key] = value
    return dataclasses.replace(cfg, **updates)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def initial_field(cfg: ExperimentConfig, grid: Grid,
                  rng: np.random.Generator | None = None) -> Field:
    """Build the configured initial state; every variant stays within [-1, 1]."""
    if cfg.ic == "sine":
        amp = 0.5 if cfg.ic_amplitude is None else cfg.ic_amplitude
        if abs(amp) > 1.0:
            raise ConfigError(f"sine amplitude {amp} would break max|u0| <= 1")
        return sample_function(grid, lambda x, y: amp * np.sin(x) * np.sin(y))
    if cfg.ic == "random":
        amp = 0.9 if cfg.ic_amplitude is None else cfg.ic_amplitude
        if abs(amp) > 1.0:
            raise ConfigError(f"random amplitude {amp} would break max|u0| <= 1")
        rng = rng if rng is not None else make_rng(cfg.seed)
        return Field(grid, rng.uniform(-amp, amp, size=(grid.n, grid.n)))
    if cfg.ic == "bubble":
        radius = 0.25 * cfg.extent if cfg.bubble_radius is None else cfg.bubble_radius
        width = cfg.eps if cfg.bubble_width is None else cfg.bubble_width
        center = 0.5 * cfg.extent

        def profile(x, y):
            rho = np.hypot(x - center, y - center)
            return np.tanh((radius - rho) / (math.sqrt(2.0) * width))

        return sample_function(grid, profile)
    raise ConfigError(f"unknown initial condition {cfg.ic!r}")


def model_symbol(cfg: ExperimentConfig, grid: Grid, params: ModelParams,
                 model: str | None = None, delta: float | None = None) -> np.ndarray:
    """Symbol of the configured model operator on this grid.

    For horizons past half the domain the direct stencil sum would wrap onto
    itself, but the Fourier symbol periodizes the interaction exactly (the
    cosine factors are invariant under shifting taps by n), so wide-horizon
    runs go through the spacing-based stencil builder.
    """
    model = cfg.model if model is None else model
    if model == "lac":
        return lac_symbol(grid, params)
    kernel = KernelSpec(alpha=cfg.alpha, delta=cfg.delta if delta is None else delta)
    if kernel.delta <= 0.5 * grid.extent:
        stencil = build_stencil(kernel, grid, order=cfg.quad_order,
                                check_tolerance=cfg.quad_check_tol)
    else:
        stencil = stencil_for_spacing(kernel, grid.spacing, order=cfg.quad_order,
                                      check_tolerance=cfg.quad_check_tol)
    return build_symbol(stencil, grid, params)


def _write_run_outputs(out: Path, cfg: ExperimentConfig, result: RunResult,
                       initial: Field) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out / "metadata.txt", config_text(cfg))
    write_text_atomic(out / "runlog.csv", runlog_csv_text(result.log))
    write_text_atomic(out / "field_initial.txt", field_dump_text(initial, 0.0))
    tau = cfg.tau if cfg.tau is not None else 0.0
    write_text_atomic(out / "field_final.txt",
                      field_dump_text(result.final, result.steps_taken * tau))


def _snapshot_monitor(out: Path, cfg: ExperimentConfig):
    plan_steps = {}
    for t_snap in cfg.snapshot_times:
        if 0.0 <= t_snap <= cfg.t_end:
            plan_steps[round(t_snap / cfg.tau)] = t_snap

    def monitor(step_index: int, t: float, field: Field):
        if step_index in plan_steps:
            label = f"{plan_steps[step_index]:g}"
            write_text_atomic(out / f"field_t{label}.txt", field_dump_text(field, t))

    return monitor if plan_steps else None


def single_run(cfg: ExperimentConfig, out: Path | None = None) -> RunResult:
    effective = resolve_config(cfg, "run")
    grid = Grid(effective.n, effective.extent)
    params = ModelParams(eps=effective.eps, kappa=effective.kappa,
                         allow_small_kappa=effective.allow_small_kappa)
    symbol = model_symbol(effective, grid, params)
    op = SpectralOperator.from_symbol(symbol, grid, params, effective.tau)
    initial = initial_field(effective, grid)
    plan = TimePlan(effective.tau, effective.t_end)
    monitor = _snapshot_monitor(out, effective) if out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    result = run(op, effective.scheme, initial, plan,
                 steady_tol=effective.steady_tol,
                 sample_stride=effective.sample_stride,
                 metadata={"seed": effective.seed, "rng": RNG_ALGORITHM,
                           "model": effective.model, "alpha": effective.alpha,
                           "delta": effective.delta, "ic": effective.ic},
                 monitor=monitor)
    if out is not None:
        _write_run_outputs(out, effective, result, initial)
    return result


def _pool_sizes(threads: int, tasks: int) -> tuple[int, int]:
    pool = max(1, min(threads, tasks))
    fft_workers = max(1, threads) if pool == 1 else 1
    return pool, fft_workers


def _map_tasks(worker, tasks, threads: int):
    pool, _ = _pool_sizes(threads, len(tasks))
    if pool <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=pool) as executor:
        return list(executor.map(worker, tasks))


# ---------------------------------------------------------------------------
# temporal convergence study


def _time_study_combo(task):
    cfg, alpha, delta, fft_workers = task
    set_fft_workers(fft_workers)
    grid = Grid(cfg.n, cfg.extent)
    params = ModelParams(eps=cfg.eps, kappa=cfg.kappa,
                         allow_small_kappa=cfg.allow_small_kappa)
    study = dataclasses.replace(cfg, alpha=alpha, delta=delta)
    symbol = model_symbol(study, grid, params)
    initial = initial_field(study, grid)
    taus = [cfg.tau_base * 0.5 ** k for k in range(cfg.tau_levels)]
    tau_ref = taus[-1] / cfg.benchmark_refinement
    op_ref = SpectralOperator.from_symbol(symbol, grid, params, tau_ref)
    benchmark = run(op_ref, "etdrk2", initial, TimePlan(tau_ref, cfg.t_end)).final
    errors = {}
    for scheme in ("etd1", "etdrk2"):
        pairs = []
        for tau in taus:
            op = SpectralOperator.from_symbol(symbol, grid, params, tau)
            final = run(op, scheme, initial, TimePlan(tau, cfg.t_end)).final
            pairs.append((tau, float(np.max(np.abs(final.values - benchmark.values)))))
        errors[scheme] = pairs
    return (alpha, delta), errors


def convergence_time(cfg: ExperimentConfig,
                     out: Path | None = None) -> dict[tuple, RateTable]:
    """Temporal refinement study against an ETDRK2 benchmark at tau_min/refinement.

    Returns a rate table per (scheme, alpha, delta) and writes one rates.csv
    per combination when an output directory is given.
    """
    cfg = resolve_config(cfg, "convergence-time")
    combos = [(alpha, delta) for alpha in cfg.alpha_list for delta in cfg.delta_list]
    _, fft_workers = _pool_sizes(cfg.threads, len(combos))
    results = _map_tasks(_time_study_combo,
                         [(cfg, a, d, fft_workers) for a, d in combos], cfg.threads)
    tables: dict[tuple, RateTable] = {}
    for (alpha, delta), errors in results:
        for scheme, pairs in errors.items():
            tables[(scheme, alpha, delta)] = rate_table(pairs)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text_atomic(out / "metadata.txt", config_text(cfg))
        for (scheme, alpha, delta), table in tables.items():
            combo_dir = out / f"{scheme}_alpha{alpha:g}_delta{delta:g}"
            combo_dir.mkdir(parents=True, exist_ok=True)
            write_text_atomic(combo_dir / "rates.csv", rates_csv_text(table))
    return tables


# ---------------------------------------------------------------------------
# spatial convergence study


def _space_study_alpha(task):
    cfg, alpha, fft_workers = task
    set_fft_workers(fft_workers)
    params = ModelParams(eps=cfg.eps, kappa=cfg.kappa,
                         allow_small_kappa=cfg.allow_small_kappa)
    study = dataclasses.replace(cfg, alpha=alpha)
    plan_tau = cfg.t_end  # single step: tau = T isolates the spatial error

    def solve(n: int) -> Field:
        grid = Grid(n, cfg.extent)
        symbol = model_symbol(study, grid, params)
        op = SpectralOperator.from_symbol(symbol, grid, params, plan_tau)
        initial = initial_field(study, grid)
        return run(op, cfg.scheme, initial, TimePlan(plan_tau, cfg.t_end)).final

    benchmark = solve(cfg.n_benchmark)
    pairs = []
    for n in cfg.n_list:
        if cfg.n_benchmark % n != 0:
            raise ConfigError(
                f"benchmark N={cfg.n_benchmark} must be a multiple of N={n} "
                "so the grids share nodes")
        stride = cfg.n_benchmark // n
        coarse = solve(n)
        gap = coarse.values - benchmark.values[::stride, ::stride]
        pairs.append((cfg.extent / n, float(np.max(np.abs(gap)))))
    return alpha, pairs


def convergence_space(cfg: ExperimentConfig,
                      out: Path | None = None) -> dict[float, RateTable]:
    """Spatial refinement at tau = T against the finest grid as benchmark."""
    cfg = resolve_config(cfg, "convergence-space")
    _, fft_workers = _pool_sizes(cfg.threads, len(cfg.alpha_list))
    results = _map_tasks(_space_study_alpha,
                         [(cfg, a, fft_workers) for a in cfg.alpha_list], cfg.threads)
    tables = {alpha: rate_table(pairs) for alpha, pairs in results}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text_atomic(out / "metadata.txt", config_text(cfg))
        for alpha, table in tables.items():
            combo_dir = out / f"alpha{alpha:g}"
            combo_dir.mkdir(parents=True, exist_ok=True)
            write_text_atomic(combo_dir / "rates.csv", rates_csv_text(table))
    return tables


# ---------------------------------------------------------------------------
# horizon-to-zero compatibility study


def _delta_study_alpha(task):
    cfg, alpha, fft_workers = task
    set_fft_workers(fft_workers)
    grid = Grid(cfg.n, cfg.extent)
    params = ModelParams(eps=cfg.eps, kappa=cfg.kappa,
                         allow_small_kappa=cfg.allow_small_kappa)
    study = dataclasses.replace(cfg, alpha=alpha)
    plan = TimePlan(cfg.t_end, cfg.t_end)
    initial = initial_field(study, grid)

    local_op = SpectralOperator.from_symbol(lac_symbol(grid, params), grid,
                                            params, plan.tau)
    local = run(local_op, cfg.scheme, initial, plan).final
    pairs = []
    for k in range(cfg.delta_levels):
        delta = cfg.delta_base * 0.5 ** k
        symbol = model_symbol(study, grid, params, model="nac", delta=delta)
        op = SpectralOperator.from_symbol(symbol, grid, params, plan.tau)
        nonlocal_final = run(op, cfg.scheme, initial, plan).final
        gap = float(np.max(np.abs(nonlocal_final.values - local.values)))
        pairs.append((delta, gap))
    return alpha, pairs


def convergence_delta(cfg: ExperimentConfig,
                      out: Path | None = None) -> dict[float, RateTable]:
    """Horizon refinement: distance between the nonlocal and local solutions at T."""
    cfg = resolve_config(cfg, "convergence-delta")
    _, fft_workers = _pool_sizes(cfg.threads, len(cfg.alpha_list))
    results = _map_tasks(_delta_study_alpha,
                         [(cfg, a, fft_workers) for a in cfg.alpha_list], cfg.threads)
    tables = {alpha: rate_table(pairs) for alpha, pairs in results}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text_atomic(out / "metadata.txt", config_text(cfg))
        for alpha, table in tables.items():
            combo_dir = out / f"alpha{alpha:g}"
            combo_dir.mkdir(parents=True, exist_ok=True)
            write_text_atomic(combo_dir / "rates.csv", rates_csv_text(table))
    return tables


# ---------------------------------------------------------------------------
# random-data stability experiment


def _stability_run(task):
    cfg, label, model, delta, out_dir, fft_workers = task
    set_fft_workers(fft_workers)
    run_cfg = dataclasses.replace(cfg, experiment="run", model=model,
                                  delta=delta if delta is not None else cfg.delta)
    out = Path(out_dir) / label if out_dir is not None else None
    result = single_run(run_cfg, out=out)
    return label, result


def stability_experiment(cfg: ExperimentConfig,
                         out: Path | None = None) -> dict[str, RunResult]:
    """Random initial data evolved under the local model and two horizons.

    All three runs start from the identical seeded random field. Horizons
    default to 3*eps (continuous regime) and 4*eps (discontinuous regime).
    """
    cfg = resolve_config(cfg, "stability")
    cfg = dataclasses.replace(cfg, ic="random")
    deltas = cfg.delta_list if cfg.delta_list else (3.0 * cfg.eps, 4.0 * cfg.eps)
    cfg = dataclasses.replace(cfg, delta_list=deltas)
    runs = [("lac", "lac", None)]
    runs += [(f"nac_delta{d:g}", "nac", d) for d in deltas]
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text_atomic(out / "metadata.txt", config_text(cfg))
    _, fft_workers = _pool_sizes(cfg.threads, len(runs))
    results = _map_tasks(
        _stability_run,
        [(cfg, label, model, delta, out, fft_workers) for label, model, delta in runs],
        cfg.threads)
    return dict(results)


# ---------------------------------------------------------------------------
# bubble / steady-state jump experiment


@dataclass
class BubbleOutcome:
    delta: float
    predicted: float | None
    measured: float
    t_measured: float
    reached_steady: bool
    result: RunResult


def _bubble_run(task):
    cfg, delta, out_dir, fft_workers = task
    set_fft_workers(fft_workers)
    run_cfg = dataclasses.replace(cfg, experiment="run", delta=delta)
    out = Path(out_dir) / f"delta{delta:g}" if out_dir is not None else None
    kernel = KernelSpec(alpha=cfg.alpha, delta=delta)
    predicted = predicted_jump(kernel, cfg.eps) if kernel.integrable else None
    result = single_run(run_cfg, out=out)
    measured = measure_jump(result.final)
    t_measured = result.steps_taken * cfg.tau
    if out is not None:
        # re-echo metadata with the measurement facts attached as comments
        comments = (f"measured_jump = {measured:.6f} at t = {t_measured:g} "
                    f"(steady: {result.reached_steady})",)
        write_text_atomic(out / "metadata.txt", config_text(run_cfg, comments))
    return BubbleOutcome(delta=delta, predicted=predicted, measured=measured,
                         t_measured=t_measured, reached_steady=result.reached_steady,
                         result=result)


def bubble_experiment(cfg: ExperimentConfig,
                      out: Path | None = None) -> dict[float, BubbleOutcome]:
    """Shrink-or-jump study of a smooth bubble for several horizons.

    Each horizon runs to the steady-state stopping criterion (or the time
    cap), then the largest nodal increment along the midline cross-section is
    compared against the theoretical jump.
    """
    cfg = resolve_config(cfg, "bubble")
    cfg = dataclasses.replace(cfg, ic="bubble")
    deltas = cfg.delta_list
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_text_atomic(out / "metadata.txt", config_text(cfg))
    _, fft_workers = _pool_sizes(cfg.threads, len(deltas))
    outcomes = _map_tasks(_bubble_run,
                          [(cfg, d, out, fft_workers) for d in deltas], cfg.threads)
    by_delta = {outcome.delta: outcome for outcome in outcomes}
    if out is not None:
        lines = ["delta,predicted,measured,t_measured,reached_steady"]
        for delta in deltas:
            o = by_delta[delta]
            predicted = "" if o.predicted is None else repr(o.predicted)
            lines.append(f"{delta!r},{predicted},{o.measured!r},{o.t_measured!r},"
                         f"{int(o.reached_steady)}")
        write_text_atomic(out / "jumps.csv", "\n".join(lines) + "\n")
    return by_delta


def write_coefficients(cfg: ExperimentConfig, out: Path) -> Path:
    """Build the stencil for (alpha, delta, h) and write the golden-format file."""
    cfg = resolve_config(cfg, "coeffs")
    spacing = cfg.spacing if cfg.spacing is not None else cfg.extent / cfg.n
    kernel = KernelSpec(alpha=cfg.alpha, delta=cfg.delta)
    stencil = stencil_for_spacing(kernel, spacing, order=cfg.quad_order,
                                  check_tolerance=cfg.quad_check_tol)
    out.mkdir(parents=True, exist_ok=True)
    write_text_atomic(out / "metadata.txt", config_text(cfg))
    path = out / f"stencil_alpha{cfg.alpha:g}_delta{cfg.delta:g}_h{spacing:g}.txt"
    write_text_atomic(path, write_stencil_text(stencil))
    return path
