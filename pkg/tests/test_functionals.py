import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pathcorr import (DegeneratePath, FunctionalTriple, ModelSpec,
                      NegativeDiscriminant, SampledPathPair,
                      bias_vector_continuous, bias_vector_discrete, correlation,
                      discrete_triple, fine_triple, grad_F, limit_constants,
                      sigma_continuous, sigma_discrete)
from pathcorr.core import decimate

from conftest import linear_pair

BM = ModelSpec.bm()


def exact_triple(x, y):
    """Sums over k = 0..n-1 in rational arithmetic."""
    n = len(x) - 1
    fx = [Fraction(v) for v in x[:-1]]
    fy = [Fraction(v) for v in y[:-1]]
    mx, my = sum(fx) / n, sum(fy) / n
    a = sum((u - mx) * (v - my) for u, v in zip(fx, fy)) / n
    d1 = sum((u - mx) ** 2 for u in fx) / n
    d2 = sum((v - my) ** 2 for v in fy) / n
    return float(a), float(d1), float(d2)


def random_pair(seed, n):
    r = np.random.default_rng(seed)
    x = np.concatenate([[0.0], np.cumsum(r.standard_normal(n))])
    y = np.concatenate([[0.0], np.cumsum(r.standard_normal(n))])
    return SampledPathPair.from_arrays(x, y)


def test_identity_on_two_points():
    tri = discrete_triple(linear_pair(2))
    assert tri.d1 == 1 / 16


def test_equal_paths_give_equal_entries():
    p = random_pair(1, 9)
    q = SampledPathPair(p.first, p.first)
    tri = discrete_triple(q)
    assert tri.a == tri.d1 == tri.d2


@pytest.mark.parametrize("seed", range(5))
def test_triple_matches_exact_sums(seed):
    p = random_pair(seed, 7)
    tri = discrete_triple(p)
    ex = exact_triple(p.first.values, p.second.values)
    np.testing.assert_allclose(tri.as_array(), ex, rtol=1e-14, atol=1e-16)


def test_fine_triple_limits():
    m = 10_000
    tri = fine_triple(linear_pair(m))
    assert abs(tri.d1 - 1 / 12) < 1e-3
    tri = fine_triple(linear_pair(m, g=lambda t: t * t))
    assert abs(tri.a - 1 / 12) < 1e-3


def test_constant_path_is_exactly_degenerate():
    p = linear_pair(50, f=lambda t: np.full_like(t, 0.1))
    tri = fine_triple(p)
    assert tri.d1 == 0.0
    with pytest.raises(DegeneratePath):
        correlation(tri)


def test_correlation_examples():
    p = random_pair(3, 40)
    f = p.first.values
    assert correlation(discrete_triple(SampledPathPair.from_arrays(f, 2 * f + 3))) == pytest.approx(1.0, abs=1e-15)
    assert correlation(discrete_triple(SampledPathPair.from_arrays(f, -f))) == -1.0
    assert correlation(FunctionalTriple(1 / 24, 1 / 16, 1 / 12)) == pytest.approx(0.5773502691896258, rel=1e-14)


def test_grad_examples():
    np.testing.assert_allclose(grad_F(FunctionalTriple(1, 1, 1)), [1, -0.5, -0.5])
    np.testing.assert_allclose(grad_F(FunctionalTriple(0, 2, 8)), [0.25, 0, 0])


def _F(v):
    return v[0] / math.sqrt(v[1] * v[2])


@given(st.floats(-0.9, 0.9), st.floats(0.1, 10), st.floats(0.1, 10))
def test_grad_matches_central_differences(rho, b, c):
    a = rho * math.sqrt(b * c)
    v = np.array([a, b, c])
    h = 1e-6
    fd = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h * max(1.0, abs(v[i]))
        fd.append((_F(v + e) - _F(v - e)) / (2 * e[i]))
    g = grad_F(FunctionalTriple(a, b, c))
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-8)


def test_bias_continuous_examples():
    m = 10_000
    v = bias_vector_continuous(linear_pair(m)).v
    np.testing.assert_allclose(v, 0.0, atol=1e-3)
    v = bias_vector_continuous(linear_pair(m, g=lambda t: t * t)).v
    np.testing.assert_allclose(v, (-1 / 12, 0, -1 / 6), atol=1e-3)
    p = linear_pair(10, f=lambda t: np.sin(2 * np.pi * t), g=lambda t: t * (1 - t))
    np.testing.assert_allclose(bias_vector_continuous(p).v, 0.0, atol=1e-15)
    np.testing.assert_allclose(bias_vector_discrete(p).v, 0.0, atol=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_bias_shift_invariant_and_matches_origin_form(seed):
    p = random_pair(seed, 64)
    x, y = p.first.values, p.second.values
    f1, g1, fb, gb = x[-1], y[-1], x[:-1].mean(), y[:-1].mean()
    origin = (0.5 * f1 * gb + 0.5 * g1 * fb - 0.5 * f1 * g1, f1 * fb - 0.5 * f1 ** 2, g1 * gb - 0.5 * g1 ** 2)
    np.testing.assert_allclose(bias_vector_continuous(p).v, origin, rtol=1e-12, atol=1e-14)
    shifted = SampledPathPair.from_arrays(x + 3.5, y - 1.25)
    np.testing.assert_allclose(bias_vector_continuous(shifted).v, origin, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(bias_vector_discrete(shifted).v, 0.5 * np.array(origin), rtol=1e-9, atol=1e-12)


def test_bias_discrete_two_points():
    assert bias_vector_discrete(linear_pair(2)).v == (-0.125, -0.125, -0.125)


@pytest.mark.parametrize("n", [1000, 10_000])
def test_discrete_bias_is_half_of_continuous(n):
    p = linear_pair(n, f=lambda t: np.expm1(t), g=lambda t: t ** 3 - t)
    # continuous vector with exact integrals: int e^t - 1 = e - 2, int t^3 - t = -1/4
    f1, g1, fb, gb = math.e - 1, 0.0, math.e - 2, -0.25
    cont = np.array([0.5 * f1 * gb + 0.5 * g1 * fb - 0.5 * f1 * g1, f1 * fb - 0.5 * f1 ** 2, 0.0])
    np.testing.assert_allclose(bias_vector_discrete(p).v, 0.5 * cont, atol=2.0 / n)


def test_mu_symmetric_under_swap():
    p = random_pair(11, 500)
    q = SampledPathPair(p.second, p.first)
    assert bias_vector_continuous(p).mu_scalar == pytest.approx(bias_vector_continuous(q).mu_scalar, rel=1e-13)
    assert bias_vector_discrete(p).mu_scalar == pytest.approx(bias_vector_discrete(q).mu_scalar, rel=1e-13)


def test_sigma_examples():
    assert sigma_continuous(FunctionalTriple(0, 1 / 12, 1 / 12), 0.0, BM) == pytest.approx(math.sqrt(2), rel=1e-14)
    d = 0.37
    assert sigma_discrete(FunctionalTriple(0, d, d), 0.0, BM) == pytest.approx(0.25 * math.sqrt(2 / d), rel=1e-14)
    tri = discrete_triple(random_pair(2, 30))
    same = FunctionalTriple(tri.d1, tri.d1, tri.d1)
    for r in (-1.0, 0.0, 0.4, 1.0):
        assert sigma_continuous(same, r, BM) == 0.0
        assert sigma_discrete(same, r, BM) == 0.0


def test_sigma_fbm_ratio_is_constant_ratio():
    c = limit_constants(0.75)
    model = ModelSpec.fbm(0.75)
    tri = discrete_triple(random_pair(5, 64))
    ratio = sigma_discrete(tri, 0.2, model, c) / sigma_continuous(tri, 0.2, model, c)
    assert ratio == pytest.approx(c.sigma_h_d / c.sigma_h, rel=1e-14)
    with pytest.raises(ValueError):
        sigma_continuous(tri, 0.2, model, None)
    with pytest.raises(ValueError):
        sigma_continuous(tri, 0.2, ModelSpec.fbm(0.6), c)


def test_negative_discriminant_raises():
    with pytest.raises(NegativeDiscriminant):
        sigma_continuous(FunctionalTriple(2.0, 1.0, 1.0), 0.0, BM)


def test_factor_one_decimation_consistent():
    p = random_pair(8, 33)
    assert discrete_triple(decimate(p, 1)) == discrete_triple(p)


@settings(max_examples=200)
@given(st.integers(0, 2**32), st.integers(2, 200), st.floats(-1, 1))
def test_schwarz_and_bracket_nonnegative(seed, n, r):
    tri = discrete_triple(random_pair(seed, n))
    assert tri.a ** 2 <= tri.d1 * tri.d2 * (1 + 1e-12)
    assert tri.d1 + tri.d2 - 2 * r * tri.a >= -1e-12 * (tri.d1 + tri.d2)
    assert abs(correlation(tri)) <= 1.0
