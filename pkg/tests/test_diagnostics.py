import math

import numpy as np
import pytest

from nlac import (Field, Grid, KernelSpec, ModelParams, RunLog, SpectralOperator,
                  StepRecord, build_stencil, discrete_energy, max_norm,
                  measure_jump, physical_energy, rate_table, spectral_energy)

TWO_PI = 2.0 * math.pi


def test_max_norm_basics(grid16, rng):
    assert max_norm(Field(grid16, np.full((16, 16), -0.3))) == 0.3
    sine = Field(grid16, 0.5 * np.sin(np.outer(grid16.coordinates(), np.ones(16))))
    assert max_norm(sine) == pytest.approx(0.5, rel=1e-15)
    values = rng.uniform(-2.0, 2.0, (16, 16))
    brute = max(abs(values[i, j]) for i in range(16) for j in range(16))
    assert max_norm(Field(grid16, values)) == brute


def test_energy_special_fields(stencil16, grid16):
    ones = Field(grid16, np.ones((16, 16)))
    assert discrete_energy(ones, stencil16, 0.1) == 0.0
    zeros = Field(grid16, np.zeros((16, 16)))
    assert discrete_energy(zeros, stencil16, 0.1) == 16 * 16 / 4.0


def test_energy_nonnegative_and_even(stencil16, grid16, rng):
    for _ in range(10):
        values = rng.uniform(-1.5, 1.5, (16, 16))
        plus = discrete_energy(Field(grid16, values), stencil16, 0.1)
        minus = discrete_energy(Field(grid16, -values), stencil16, 0.1)
        assert plus >= 0.0
        assert plus == pytest.approx(minus, rel=1e-12)


def test_energy_direct_vs_spectral(stencil16, grid16, params, rng):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=0.1)
    for _ in range(10):
        u = Field(grid16, rng.uniform(-1.0, 1.0, (16, 16)))
        direct = discrete_energy(u, stencil16, params.eps)
        fourier = spectral_energy(u.values, op.diffusion_symbol, params.eps)
        assert fourier == pytest.approx(direct, rel=1e-10)


def test_physical_energy_scaling(stencil16, grid16, rng):
    u = Field(grid16, rng.uniform(-1.0, 1.0, (16, 16)))
    assert physical_energy(u, stencil16, 0.1) == pytest.approx(
        grid16.spacing ** 2 * discrete_energy(u, stencil16, 0.1), rel=1e-15)


def test_measure_jump_constant_is_zero(grid16):
    assert measure_jump(Field(grid16, np.full((16, 16), 0.4))) == 0.0


def test_measure_jump_step_profile(grid16):
    values = -np.ones((16, 16))
    values[4:9, :] = 1.0
    field = Field(grid16, values)
    assert measure_jump(field) == 2.0
    assert measure_jump(field, row=3) == 2.0


def test_measure_jump_invariances(grid16, rng):
    values = rng.uniform(-1.0, 1.0, (16, 16))
    base = measure_jump(Field(grid16, values), row=5)
    shifted = measure_jump(Field(grid16, values + 0.37), row=5)
    assert shifted == pytest.approx(base, rel=1e-12)
    rotated = measure_jump(Field(grid16, np.roll(values, 7, axis=0)), row=5)
    assert rotated == pytest.approx(base, rel=1e-15)


def test_measure_jump_includes_wrap(grid16):
    values = np.zeros((16, 16))
    values[0, :] = 1.0  # wrap gap between i=15 and i=0
    values[1:, :] = np.linspace(0.9, 0.0, 15)[:, None]
    assert measure_jump(Field(grid16, values)) == pytest.approx(1.0)


def test_runlog_validation():
    log = RunLog()
    log.append(StepRecord(0.1, 0.5, 1.0, 0.2))
    with pytest.raises(ValueError):
        log.append(StepRecord(0.1, 0.5, 1.0, 0.2))  # t must increase
    with pytest.raises(ValueError):
        log.append(StepRecord(0.2, math.nan, 1.0, 0.2))
    log.append(StepRecord(0.2, 0.4, 0.9, 0.1))
    assert list(log.column("max_norm")) == [0.5, 0.4]


def test_rate_table_halving():
    base = 4.0
    table = rate_table([(0.1, 4 * base), (0.05, 2 * base), (0.025, base)])
    assert table.rows[0].rate is None
    assert table.rates == pytest.approx([1.0, 1.0])


def test_rate_table_generalized():
    # params dropping by 10x with errors dropping by 100x -> slope 2
    table = rate_table([(1.0, 1.0), (0.1, 0.01)])
    assert table.rates == pytest.approx([2.0])


def test_rate_table_rejects_bad_input():
    with pytest.raises(ValueError):
        rate_table([(0.1, 1.0), (0.2, 0.5)])
    with pytest.raises(ValueError):
        rate_table([(0.1, 0.0), (0.05, 0.5)])
