import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import matmul_toeplitz

from pathcorr import (ModelSpec, QuadratureConfig, QuadratureError,
                      bm_constants, limit_constants, lower_bound, r2_remainder,
                      sigma_h_d, sigma_h_d_sq, sigma_h_sq_via_lemma,
                      sigma_h_sq_via_simplified)
from pathcorr.constants import bernoulli_B2
from pathcorr.simulate import fgn_autocov, sample_arrays, split_stream

# brute-force midpoint sum of the R2 integral over [0, 1e4], step 1e-3, frozen
R2_PINNED = {(0.5, 0.5): 0.001962858300119662, (0.2, 0.5): 0.010029454735410814,
             (0.8, 0.3): 0.000712592300252557, (0.05, 0.9): 0.0071856091700683855}


def brute_r2(g, a, X=1e4, h=1e-3):
    parts = []
    N = int(round(X / h))
    for s in range(0, N, 10**6):
        x = (np.arange(s, min(s + 10**6, N)) + 0.5) * h
        fr = x - np.floor(x)
        parts.append(np.sum((fr * fr - fr + 1 / 6) * (g + x) ** (a - 2)) * h)
    return a * (1 - a) / 2 * math.fsum(parts)


def test_bernoulli_b2():
    assert bernoulli_B2(0.0) == 1 / 6
    assert bernoulli_B2(0.5) == pytest.approx(-1 / 12, rel=1e-15)
    val, _ = integrate.quad(bernoulli_B2, 0, 1, epsabs=1e-14)
    assert abs(val) < 1e-12


def test_bm_constants():
    cont, disc = bm_constants()
    assert cont ** 2 == pytest.approx(1 / 12, rel=1e-15)
    assert disc == 0.25


@pytest.mark.parametrize("n", [1, 2, 7, 64])
def test_sawtooth_square_integral(n):
    edges = np.arange(n + 1) / n
    x, w = np.polynomial.legendre.leggauss(4)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        u = lo + (hi - lo) * (x + 1) / 2
        total += np.sum(w * (np.ceil(n * u) - n * u - 0.5) ** 2) * (hi - lo) / 2
    assert abs(total - 1 / 12) < 1e-12


@pytest.mark.parametrize("g,a", list(R2_PINNED))
def test_r2_against_pinned_brute_force(g, a):
    assert abs(r2_remainder(g, a) - R2_PINNED[(g, a)]) < 1e-5


def test_r2_brute_force_live():
    assert abs(r2_remainder(0.5, 0.5) - brute_r2(0.5, 0.5)) < 1e-5


def test_r2_nonincreasing():
    g = np.linspace(0.005, 0.995, 100)
    for a in (0.1, 0.5, 0.9):
        vals = r2_remainder(g, a)
        assert np.all(np.diff(vals) <= 0)
        assert r2_remainder(0.2, a) >= r2_remainder(0.8, a)


def test_r2_argument_checks():
    with pytest.raises(ValueError):
        r2_remainder(0.0, 0.5)
    with pytest.raises(ValueError):
        r2_remainder(0.5, 1.0)


@pytest.mark.parametrize("H", [0.55, 0.75, 0.95])
def test_polynomial_part_closed_form(H):
    a = 2 * H - 1

    def poly(g):
        return (-g ** (a + 1) / (a * (1 + a)) + g ** a / (2 * a) - g ** (a - 1) / 12) * (0.5 - g)

    val, _ = integrate.quad(poly, 0, 1, epsabs=1e-13, limit=200)
    closed = (3 - a) * (1 - a) / (24 * a * (a + 1) * (a + 3))
    assert val == pytest.approx(closed, rel=1e-9)
    assert a * (a + 1) * closed == pytest.approx(lower_bound(H), rel=1e-14)


@pytest.mark.parametrize("H", [0.51, 0.6, 0.75, 0.9, 0.99])
def test_two_routes_agree(H):
    assert abs(sigma_h_sq_via_lemma(H) - sigma_h_sq_via_simplified(H)) <= 2e-8


@pytest.mark.parametrize("H", [0.55, 0.65, 0.75, 0.85, 0.95])
def test_lower_bound(H):
    assert sigma_h_sq_via_lemma(H) > lower_bound(H)


def test_reported_values_at_three_quarters():
    c = limit_constants(0.75)
    assert abs(c.sigma_h_sq - 0.025485) < 1e-4
    assert abs(c.sigma_h_d_sq - 0.020980) < 1e-4
    # the square roots are far from the reported numbers
    assert abs(c.sigma_h - 0.025485) > 0.1
    assert abs(c.sigma_h_d - 0.020980) > 0.1
    assert c.lower_bound == pytest.approx(0.014881, abs=1e-6)
    assert c.err_sq < 1e-8 and c.err_d < 1e-8


def test_sigma_h_d_functions_consistent():
    assert sigma_h_d(0.7) ** 2 == pytest.approx(sigma_h_d_sq(0.7), rel=1e-12)


def test_deterministic_bitwise():
    cfg = QuadratureConfig(abs_tol=1e-8)
    assert sigma_h_sq_via_lemma(0.8, cfg) == sigma_h_sq_via_lemma(0.8, cfg)
    assert sigma_h_d_sq(0.8, cfg) == sigma_h_d_sq(0.8, cfg)


def test_cutoff_doubling_within_error():
    base = limit_constants(0.7)
    doubled = limit_constants(0.7, QuadratureConfig(cutoff_scale=2.0))
    assert abs(doubled.sigma_h_sq - base.sigma_h_sq) < max(base.err_sq, 1e-15)
    assert abs(doubled.sigma_h_d - base.sigma_h_d) < max(base.err_d, 1e-15)
    lemma2 = sigma_h_sq_via_lemma(0.7, QuadratureConfig(cutoff_scale=2.0))
    assert abs(lemma2 - sigma_h_sq_via_lemma(0.7)) < 1e-8


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError):
        sigma_h_sq_via_simplified(0.75, QuadratureConfig(abs_tol=1e-14, max_subdivisions=10))


def test_hurst_out_of_range():
    for H in (0.5, 1.0, 0.3):
        with pytest.raises(ValueError):
            limit_constants(H)


def test_cache_returns_same_object():
    assert limit_constants(0.75) is limit_constants(0.75)


def _kernel_variance(H, n, cell):
    """n^alpha Var(int h dB^H) for a cell-periodic step integrand, exactly."""
    K = cell.size
    m = n * K
    h = np.tile(cell, n)
    c = fgn_autocov(H, np.arange(m)) * m ** (-2 * H)
    return n ** (2 * H - 1) * float(h @ matmul_toeplitz(c, h))


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_sawtooth_variance_oracle(H):
    K = 64
    saw = 0.5 - (np.arange(K) + 0.5) / K
    v = _kernel_variance(H, 1024, saw)
    assert v == pytest.approx(limit_constants(H).sigma_h_sq, rel=3e-3)


@pytest.mark.parametrize("H", [0.6, 0.75, 0.9])
def test_square_wave_variance_oracle(H):
    K = 64
    sq = np.where(np.arange(K) < K // 2, 0.25, -0.25)
    v = _kernel_variance(H, 1024, sq)
    assert v == pytest.approx(limit_constants(H).sigma_h_d_sq, rel=2e-3)


def test_monte_carlo_oracle_sigma_h_sq():
    H, n, K, M = 0.75, 256, 16, 4000
    m = n * K
    saw = np.tile(0.5 - (np.arange(K) + 0.5) / K, n)
    model = ModelSpec.fbm(H, 0.0)
    vals = np.empty(M)
    for i in range(M):
        x1, _ = sample_arrays(model, m, split_stream(77, i))
        vals[i] = n ** ((2 * H - 1) / 2) * np.dot(saw, np.diff(x1))
    var = vals.var(ddof=1)
    se = var * math.sqrt(2 / (M - 1))
    assert abs(var - limit_constants(H).sigma_h_sq) < 3 * se
