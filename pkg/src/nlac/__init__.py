"""Nonlocal Allen-Cahn solver on periodic 2D grids.

Quadrature-based stencils for the nonlocal diffusion operator, FFT symbol
application, and maximum-principle-preserving first/second order exponential
time differencing, plus an experiment harness reproducing convergence rates,
stability properties and steady-state jump predictions.
"""

__version__ = "0.1.0"

from .kernels import (KernelSpec, NonIntegrableKernelError, critical_delta,
                      evaluate_kernel, kernel_mass, predicted_jump)
from .operator import (Field, Grid, QuadratureError, Stencil, apply_direct,
                       build_stencil, read_stencil_text, sample_function,
                       stencil_for_spacing, write_stencil_text)
from .spectral import (ModelParams, SpectralConsistencyError, SpectralOperator,
                       apply_fft, build_symbol, phi, set_fft_workers)
from .diagnostics import (RateTable, RunLog, StepRecord, discrete_energy,
                          max_norm, measure_jump, physical_energy, rate_table,
                          spectral_energy)
from .etd import (MaxPrincipleError, NumericalError, RunResult, TimePlan,
                  etd1_step, etdrk2_step, lac_symbol, nonlinear_term, run)

__all__ = [
    "KernelSpec", "NonIntegrableKernelError", "critical_delta",
    "evaluate_kernel", "kernel_mass", "predicted_jump",
    "Field", "Grid", "QuadratureError", "Stencil", "apply_direct",
    "build_stencil", "read_stencil_text", "sample_function",
    "stencil_for_spacing", "write_stencil_text",
    "ModelParams", "SpectralConsistencyError", "SpectralOperator",
    "apply_fft", "build_symbol", "phi", "set_fft_workers",
    "RateTable", "RunLog", "StepRecord", "discrete_energy", "max_norm",
    "measure_jump", "physical_energy", "rate_table", "spectral_energy",
    "MaxPrincipleError", "NumericalError", "RunResult", "TimePlan",
    "etd1_step", "etdrk2_step", "lac_symbol", "nonlinear_term", "run",
]
