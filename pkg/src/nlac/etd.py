"""Exponential time differencing steppers and the time-marching driver.

Both steppers treat the stabilized linear part exactly through the phi
tables and the cubic nonlinearity explicitly:

    first order:   u+ = phi0(L tau) u + tau phi1(L tau) f(u)
    second order:  predictor as above, then
                   u+ = predictor + tau phi2(L tau) (f(predictor) - f(u))

with f(u) = (kappa+1) u - u^3. With kappa >= 2 both steppers keep
max|u| <= 1 for every step size whenever the initial state does; the driver
treats any violation as an implementation bug and aborts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .diagnostics import RunLog, StepRecord, max_norm, spectral_energy
from .operator import Field, Grid
from .spectral import ModelParams, SpectralOperator, apply_fft

MAX_PRINCIPLE_TOL = 1e-12


class MaxPrincipleError(RuntimeError):
    """A guaranteed-regime step left the invariant band max|u| <= 1."""

    def __init__(self, step_index: int, norm: float):
        self.step_index = step_index
        self.norm = norm
        super().__init__(
            f"maximum principle violated at step {step_index}: max|u| = {norm!r} > 1"
        )


class NumericalError(RuntimeError):
    """The state stopped being finite."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"non-finite state detected at step {step_index}")


@dataclass(frozen=True)
class TimePlan:
    """Uniform step size tau covering [0, t_end] in an exact number of steps."""

    tau: float
    t_end: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"step size must be positive, got tau={self.tau}")
        if self.t_end < 0.0:
            raise ValueError(f"final time must be nonnegative, got {self.t_end}")
        k = round(self.t_end / self.tau)
        if abs(k * self.tau - self.t_end) > 1e-12 * max(self.t_end, self.tau):
            raise ValueError(
                f"t_end={self.t_end} is not an integer number of steps of tau={self.tau}"
            )

    @property
    def steps(self) -> int:
        return round(self.t_end / self.tau)


def nonlinear_term(u: Field, kappa: float) -> Field:
    """Pointwise stabilized nonlinearity f(u) = (kappa+1) u - u^3."""
    vals = u.values
    return Field(u.grid, (kappa + 1.0) * vals - vals * vals * vals)


def etd1_step(op: SpectralOperator, u: Field, nonlinearity=nonlinear_term) -> Field:
    source = nonlinearity(u, op.params.kappa)
    decayed = apply_fft(op, "phi0", u)
    driven = apply_fft(op, "phi1", source)
    return Field(u.grid, decayed.values + op.tau * driven.values)


def etdrk2_step(op: SpectralOperator, u: Field, nonlinearity=nonlinear_term) -> Field:
    predictor = etd1_step(op, u, nonlinearity)
    source_gap = Field(u.grid, nonlinearity(predictor, op.params.kappa).values
                       - nonlinearity(u, op.params.kappa).values)
    corrector = apply_fft(op, "phi2", source_gap)
    return Field(u.grid, predictor.values + op.tau * corrector.values)


_STEPPERS = {"etd1": etd1_step, "etdrk2": etdrk2_step}


def lac_symbol(grid: Grid, params: ModelParams) -> np.ndarray:
    """Eigenvalues of the local reference operator (5-point Laplacian).

    Plugging this symbol into the same steppers yields the local Allen-Cahn
    solver whose O(h^2) spatial accuracy matches the nonlocal discretization.
    """
    modes = 2.0 - 2.0 * np.cos(2.0 * math.pi * np.arange(grid.n) / grid.n)
    laplace = (modes[:, None] + modes[None, :]) / grid.spacing ** 2
    return params.kappa + params.eps ** 2 * laplace


@dataclass
class RunResult:
    final: Field
    log: RunLog
    steps_taken: int
    reached_steady: bool


def run(op: SpectralOperator, scheme: str, initial: Field, plan: TimePlan, *,
        steady_tol: float | None = None, sample_stride: int | None = None,
        metadata: dict | None = None, monitor=None) -> RunResult:
    """March the state plan.steps steps, recording diagnostics after each one.

    Records (t, max|u|, energy, max|du|/tau) every sample_stride steps and at
    the last step; the default stride is 1 up to n=256 and 10 above. With
    steady_tol set, stops early once the increment rate drops below it.
    monitor(step_index, t, field) is called on the initial state and after
    every step; it must not mutate the field.
    """
    if scheme not in _STEPPERS:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {sorted(_STEPPERS)}")
    if initial.grid != op.grid:
        raise ValueError("initial state and operator live on different grids")
    stepper = _STEPPERS[scheme]
    if sample_stride is None:
        sample_stride = 1 if op.grid.n <= 256 else 10
    if sample_stride < 1:
        raise ValueError(f"sample stride must be >= 1, got {sample_stride}")

    guarded = op.params.guarantees_max_principle and max_norm(initial) <= 1.0
    log = RunLog(metadata={
        "scheme": scheme,
        "tau": plan.tau,
        "t_end": plan.t_end,
        "eps": op.params.eps,
        "kappa": op.params.kappa,
        "n": op.grid.n,
        "extent": op.grid.extent,
        "max_principle_guaranteed": guarded,
        "version": __version__,
        **(metadata or {}),
    })
    if monitor is not None:
        monitor(0, 0.0, initial)

    diffusion = op.diffusion_symbol
    state = initial
    reached_steady = False
    steps_taken = 0
    for n in range(plan.steps):
        step_index = n + 1
        try:
            new = stepper(op, state)
        except ValueError as exc:
            # a non-finite intermediate trips Field's finiteness guard inside
            # the stepper; surface it with the step index attached
            raise NumericalError(step_index) from exc
        if not np.isfinite(new.values).all():
            raise NumericalError(step_index)
        norm = max_norm(new)
        if guarded and norm > 1.0 + MAX_PRINCIPLE_TOL:
            raise MaxPrincipleError(step_index, norm)
        increment = float(np.max(np.abs(new.values - state.values))) / plan.tau
        state = new
        steps_taken = step_index
        if steady_tol is not None and increment < steady_tol:
            reached_steady = True
        t = step_index * plan.tau
        if step_index % sample_stride == 0 or step_index == plan.steps or reached_steady:
            energy = spectral_energy(state.values, diffusion, op.params.eps)
            log.append(StepRecord(t, norm, energy, increment))
        if monitor is not None:
            monitor(step_index, t, state)
        if reached_steady:
            break
    return RunResult(final=state, log=log, steps_taken=steps_taken,
                     reached_steady=reached_steady)
