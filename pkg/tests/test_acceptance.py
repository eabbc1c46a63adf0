"""Acceptance gate: every criterion at its stated tolerance, one line each.

The heavy studies run through the same harness entry points the CLI uses,
at the documented desk-scale settings. Expect roughly 10-15 minutes for the
whole module on a two-core laptop; the bubble study dominates.
"""

import math

import numpy as np
import pytest

from nlac import (Field, Grid, KernelSpec, ModelParams, SpectralOperator,
                  TimePlan, apply_direct, apply_fft, build_stencil,
                  build_symbol, kernel_mass, predicted_jump, run,
                  stencil_for_spacing)
from nlac.harness import (ExperimentConfig, bubble_experiment, convergence_delta,
                          convergence_space, convergence_time)

from oracles import continuum_diffusion_symbol, kernel_mass_2d, second_moment_2d

TWO_PI = 2.0 * math.pi
THREADS = 2


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'}: {name} -- {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def temporal_tables():
    # N=128, T=0.5, alpha in {1,3}, delta in {0.2,2}, tau = 0.05 * 2^-k,
    # k = 0..5, benchmark = etdrk2 at tau_min/64 (all defaults)
    return convergence_time(ExperimentConfig(threads=THREADS))


def test_temporal_order_etd1(temporal_tables):
    worst = []
    for (scheme, alpha, delta), table in sorted(temporal_tables.items()):
        if scheme != "etd1":
            continue
        tail = table.rates[-3:]
        print(f"  etd1 alpha={alpha:g} delta={delta:g}: rates {table.rates}")
        worst.extend(tail)
    ok = all(0.90 <= r <= 1.10 for r in worst)
    report("temporal order etd1", ok,
           f"last-three rates within [0.90, 1.10]: {[f'{r:.4f}' for r in worst]}")


def test_temporal_order_etdrk2(temporal_tables):
    worst = []
    for (scheme, alpha, delta), table in sorted(temporal_tables.items()):
        if scheme != "etdrk2":
            continue
        tail = table.rates[-3:]
        print(f"  etdrk2 alpha={alpha:g} delta={delta:g}: rates {table.rates}")
        worst.extend(tail)
    ok = all(1.90 <= r <= 2.10 for r in worst)
    report("temporal order etdrk2", ok,
           f"last-three rates within [1.90, 2.10]: {[f'{r:.4f}' for r in worst]}")


def test_temporal_errors_insensitive_to_kernel(temporal_tables):
    # errors nearly identical across delta and alpha at fixed scheme and tau
    for scheme in ("etd1", "etdrk2"):
        finest = [table.rows[-1].error
                  for (s, _, _), table in sorted(temporal_tables.items()) if s == scheme]
        spread = (max(finest) - min(finest)) / max(finest)
        print(f"  {scheme}: finest-tau errors {finest} spread {spread:.3f}")
        assert spread < 0.15


def test_spatial_order():
    tables = convergence_space(ExperimentConfig(threads=THREADS))
    all_rates = []
    for alpha, table in sorted(tables.items()):
        print(f"  spatial alpha={alpha:g}: rates {table.rates}")
        all_rates.extend(table.rates)
    ok = (all(1.6 <= r <= 3.0 for r in all_rates)
          and float(np.mean(all_rates)) >= 1.8)
    report("spatial order", ok,
           f"rates in [1.6, 3.0] with mean {np.mean(all_rates):.3f} >= 1.8: "
           f"{[f'{r:.3f}' for r in all_rates]}")


def test_delta_to_zero_compatibility():
    tables = convergence_delta(ExperimentConfig(threads=THREADS, alpha_list=(1.0,)))
    rates = tables[1.0].rates
    ok = all(1.7 <= r <= 2.3 for r in rates)
    report("delta->0 compatibility", ok,
           f"NAC-vs-LAC rates within [1.7, 2.3]: {[f'{r:.4f}' for r in rates]}")


@pytest.fixture(scope="module")
def bubble_outcomes():
    # N=512, tau=0.01, eps=0.1, alpha=1, deltas {0.2, 0.8, 1.6, 3.2}
    return bubble_experiment(ExperimentConfig(threads=THREADS))


def test_jump_reproduction(bubble_outcomes):
    theory = {0.8: 1.802776, 1.6: 1.952562, 3.2: 1.988247}
    lines = []
    ok = True
    for delta, target in theory.items():
        outcome = bubble_outcomes[delta]
        gap = abs(outcome.measured - target)
        lines.append(f"delta={delta:g}: measured {outcome.measured:.6f} "
                     f"target {target:.6f} |gap| {gap:.5f}")
        ok = ok and gap <= 0.01 and outcome.reached_steady
    extinct = bubble_outcomes[0.2]
    lines.append(f"delta=0.2: jump {extinct.measured:.2e}, "
                 f"final uniform={extinct.measured < 1e-6}")
    ok = ok and extinct.measured <= 1e-6 and extinct.reached_steady
    report("jump reproduction", ok, "; ".join(lines))


@pytest.fixture(scope="module")
def principle_matrix_runs():
    # kappa x tau x 5 seeds, both schemes, N=64, 100 steps each
    grid = Grid(64, TWO_PI)
    stencil = build_stencil(KernelSpec(1.0, 2.0), grid)
    runs = []
    for kappa in (2.0, 3.0, 10.0):
        params = ModelParams(eps=0.1, kappa=kappa)
        symbol = build_symbol(stencil, grid, params)
        for tau in (0.01, 1.0, 100.0):
            op = SpectralOperator.from_symbol(symbol, grid, params, tau)
            for seed in range(5):
                rng = np.random.default_rng(seed)
                initial = Field(grid, rng.uniform(-0.9, 0.9, (64, 64)))
                for scheme in ("etd1", "etdrk2"):
                    result = run(op, scheme, initial, TimePlan(tau, 100 * tau),
                                 sample_stride=1)
                    runs.append((kappa, tau, seed, scheme, result))
    return runs


def test_maximum_principle_matrix(principle_matrix_runs):
    violations = 0
    worst = 0.0
    for kappa, tau, seed, scheme, result in principle_matrix_runs:
        norms = result.log.column("max_norm")
        assert len(norms) == 100
        worst = max(worst, float(norms.max()))
        violations += int(np.any(norms > 1.0 + 1e-12))
    report("maximum principle", violations == 0,
           f"{len(principle_matrix_runs)} runs x 100 steps, "
           f"worst max|u| = {worst:.15f}, violations = {violations}")


def test_energy_decay_matrix(principle_matrix_runs):
    violations = 0
    worst_uptick = 0.0
    checked = 0
    for kappa, tau, seed, scheme, result in principle_matrix_runs:
        if scheme != "etd1":
            continue
        checked += 1
        energies = result.log.column("energy")
        for prev, cur in zip(energies, energies[1:]):
            uptick = cur - prev
            if uptick > 1e-10 * (1.0 + abs(prev)):
                violations += 1
            worst_uptick = max(worst_uptick, uptick / (1.0 + abs(prev)))
    report("etd1 energy decay", violations == 0,
           f"{checked} runs, worst relative uptick {worst_uptick:.3e}, "
           f"violations = {violations}")


def test_oracle_equivalence_fft_vs_direct():
    params = ModelParams(eps=0.1, kappa=2.0)
    kern = KernelSpec(1.0, 2.0)
    rng = np.random.default_rng(12345)
    worst = 0.0
    for n in (8, 16, 32):
        grid = Grid(n, TWO_PI)
        stencil = build_stencil(kern, grid)
        op = SpectralOperator.from_stencil(stencil, grid, params, tau=0.1)
        for _ in range(50):
            u = Field(grid, rng.uniform(-1.0, 1.0, (n, n)))
            fft_image = apply_fft(op, "linear", u)
            direct = params.kappa * u.values - params.eps ** 2 * apply_direct(stencil, u).values
            rel = float(np.max(np.abs(fft_image.values - direct))
                        / np.max(np.abs(direct)))
            worst = max(worst, rel)
    report("oracle equivalence fft/direct", worst <= 1e-11,
           f"150 random fields, worst relative gap {worst:.3e} <= 1e-11")


def test_symbol_oracle_low_modes():
    # discrete eigenvalues approach the continuum nonlocal symbol at O(h^2)
    params = ModelParams(eps=0.1, kappa=2.0)
    modes = ((1, 0), (1, 1), (2, 1))
    details = []
    ok = True
    for alpha in (1.0, 3.0):
        sigma = {m: continuum_diffusion_symbol(alpha, 2.0, math.hypot(*m))
                 for m in modes}
        errors = []
        for n in (32, 64, 128, 256):
            grid = Grid(n, TWO_PI)
            stencil = build_stencil(KernelSpec(alpha, 2.0), grid)
            symbol = build_symbol(stencil, grid, params)
            diffusion = (params.kappa - symbol) / params.eps ** 2
            errors.append(max(abs(float(diffusion[m]) - sigma[m]) for m in modes))
        rates = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        details.append(f"alpha={alpha:g} rates {[f'{r:.3f}' for r in rates]}")
        ok = ok and all(1.7 <= r <= 2.3 for r in rates)
    report("symbol oracle", ok, "; ".join(details))


def test_stencil_property_matrix():
    checked = 0
    for alpha in (0.0, 1.0, 1.5, 3.0):
        for delta in (0.2, 2.0):
            moment = second_moment_2d(alpha, delta)
            assert moment == pytest.approx(4.0, rel=1e-6)
            stencil = stencil_for_spacing(KernelSpec(alpha, delta), TWO_PI / 64)
            assert stencil.coeffs[0, 0] == 0.0
            assert np.array_equal(stencil.coeffs, stencil.coeffs.T)
            assert np.all(stencil.coeffs >= 0.0)
            if alpha < 2.0:
                mass = kernel_mass(KernelSpec(alpha, delta))
                assert mass == pytest.approx(kernel_mass_2d(alpha, delta), rel=1e-6)
            checked += 1
    report("stencil properties", checked == 8,
           f"{checked} kernel configs: c00=0, symmetric, nonnegative, "
           "second moment = 4 to 1e-6")
