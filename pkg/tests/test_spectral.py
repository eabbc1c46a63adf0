import math

import mpmath
import numpy as np
import pytest

from nlac import (Field, Grid, KernelSpec, ModelParams, SpectralConsistencyError,
                  SpectralOperator, apply_direct, apply_fft, build_stencil,
                  build_symbol, phi)

TWO_PI = 2.0 * math.pi


def mp_phi(gamma, a):
    """High-precision phi reference."""
    with mpmath.workdps(60):
        x = mpmath.mpf(a)
        if x == 0:
            return float((1.0, 1.0, 0.5)[gamma])
        if gamma == 0:
            return float(mpmath.e ** (-x))
        if gamma == 1:
            return float((1 - mpmath.e ** (-x)) / x)
        return float((mpmath.e ** (-x) - 1 + x) / x ** 2)


def test_phi_limits():
    assert phi(0, 0.0) == 1.0
    assert phi(1, 0.0) == 1.0
    assert phi(2, 0.0) == 0.5


def test_phi_known_value():
    assert phi(1, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-15)


def test_phi_rejects_bad_input():
    with pytest.raises(ValueError):
        phi(1, -1e-9)
    with pytest.raises(ValueError):
        phi(3, 1.0)


@pytest.mark.parametrize("gamma", [0, 1, 2])
def test_phi_accuracy_full_range(gamma):
    # includes both sides of the series/closed-form switch
    for a in np.logspace(-12, 3, 121):
        expected = mp_phi(gamma, a)
        assert phi(gamma, a) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("gamma", [0, 1, 2])
def test_phi_strictly_decreasing(gamma):
    # stay below the exp underflow threshold so phi0 remains representable
    a = np.logspace(-8, 2, 200)
    values = phi(gamma, a)
    assert np.all(np.diff(values) < 0.0)
    assert np.all(values > 0.0)


def test_phi_vectorized_matches_scalar():
    a = np.array([0.0, 1e-6, 0.04, 0.06, 1.0, 700.0])
    vec = phi(2, a)
    assert vec.shape == a.shape
    for i, ai in enumerate(a):
        assert vec[i] == phi(2, float(ai))


def test_model_params_guard():
    with pytest.raises(ValueError):
        ModelParams(eps=0.1, kappa=1.0)
    relaxed = ModelParams(eps=0.1, kappa=1.0, allow_small_kappa=True)
    assert not relaxed.guarantees_max_principle
    assert ModelParams(eps=0.1, kappa=2.0).guarantees_max_principle


def test_symbol_zero_mode_and_symmetry(stencil16, grid16, params):
    symbol = build_symbol(stencil16, grid16, params)
    assert symbol[0, 0] == params.kappa
    assert np.array_equal(symbol, symbol.T)
    assert symbol.min() == params.kappa
    assert np.count_nonzero(symbol == params.kappa) == 1  # attained only at the zero mode


def test_symbol_matches_rayleigh_quotient(grid16, params):
    # mode cos(2 pi (x+y)/X) is an exact eigenvector; compare against the
    # direct-stencil Rayleigh quotient for (k,l) = (2,2) in 1-based indexing
    st = build_stencil(KernelSpec(1.0, 2.0), grid16)
    symbol = build_symbol(st, grid16, params)
    coords = grid16.coordinates()
    xs, ys = np.meshgrid(coords, coords, indexing="ij")
    mode = Field(grid16, np.cos(2.0 * math.pi * (xs + ys) / grid16.extent))
    image = params.kappa * mode.values - params.eps ** 2 * apply_direct(st, mode).values
    rayleigh = float(np.sum(image * mode.values) / np.sum(mode.values ** 2))
    assert symbol[1, 1] == pytest.approx(rayleigh, rel=1e-12)


def test_operator_tables_positive(stencil16, grid16, params):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=100.0)
    for table in (op.phi0, op.phi1, op.phi2):
        assert np.all(table > 0.0)
    finer = op.with_tau(1e-6)
    assert finer.symbol is op.symbol
    assert finer.phi1[0, 0] == pytest.approx(1.0, abs=1e-6)


def test_apply_fft_matches_direct(params, rng):
    kern = KernelSpec(1.0, 2.0)
    worst = 0.0
    for n in (8, 16, 32):
        grid = Grid(n, TWO_PI)
        st = build_stencil(kern, grid)
        op = SpectralOperator.from_stencil(st, grid, params, tau=0.05)
        for _ in range(50):
            u = Field(grid, rng.uniform(-1.0, 1.0, (n, n)))
            fft_image = apply_fft(op, "linear", u)
            direct = params.kappa * u.values - params.eps ** 2 * apply_direct(st, u).values
            gap = float(np.max(np.abs(fft_image.values - direct)))
            worst = max(worst, gap / float(np.max(np.abs(direct))))
    print(f"fft/direct worst relative gap: {worst:.3e}")
    assert worst <= 1e-11


def test_apply_fft_zero_mode_decay(stencil16, grid16, params):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=0.3)
    ones = Field(grid16, np.ones((16, 16)))
    decayed = apply_fft(op, "phi0", ones)
    expected = math.exp(-params.kappa * 0.3)
    assert np.max(np.abs(decayed.values - expected)) <= 1e-14


def test_apply_fft_diffusion_kills_constants(stencil16, grid16, params):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=0.3)
    ones = Field(grid16, np.full((16, 16), -0.4))
    image = apply_fft(op, "diffusion", ones)
    assert np.max(np.abs(image.values)) <= 1e-13


def test_apply_fft_unknown_symbol(stencil16, grid16, params):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=0.3)
    with pytest.raises(ValueError):
        apply_fft(op, "laplacian", Field(grid16, np.zeros((16, 16))))


def test_fft_round_trip(grid16, rng):
    import scipy.fft as fft
    u = rng.uniform(-1.0, 1.0, (16, 16))
    back = fft.ifft2(fft.fft2(u)).real
    assert np.max(np.abs(back - u)) <= 1e-13 * np.max(np.abs(u))


def test_residue_guard_trips_on_asymmetric_symbol(grid16, params, stencil16, rng):
    op = SpectralOperator.from_stencil(stencil16, grid16, params, tau=0.1)
    broken = np.array(op.symbol)
    broken[1, 2] *= 3.0  # breaks the even symmetry the realness relies on
    bad = SpectralOperator(grid=grid16, params=params, symbol=broken, tau=op.tau,
                           phi0=op.phi0, phi1=op.phi1, phi2=op.phi2)
    u = Field(grid16, rng.uniform(-1.0, 1.0, (16, 16)))
    with pytest.raises(SpectralConsistencyError):
        apply_fft(bad, "linear", u)
