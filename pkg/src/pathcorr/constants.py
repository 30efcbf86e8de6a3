"""Limiting-variance constants for the fractional statistics.

``sigma_h_sq`` is obtained two ways that share no integrand: as a weighted
integral of the remainder function ``R(gamma)`` over (0, 1), and as a single
improper integral over (0, inf) plus a closed-form lower-bound term.
``sigma_h_d`` is the analogous constant for the discrete ``n`` versus ``2n``
statistic.

All improper integrals have the form ``int_0^inf B2({x}) k(x) dx`` with the
periodic Bernoulli polynomial ``B2``. They are split at the integers:

* the cell [0, 1] is integrated in closed form (``k`` is a sum of powers
  there, and this is where the endpoint singularities live);
* cells [j, j+1], j >= 1, use fixed-order Gauss-Legendre rules;
* the series is cut at the first ``N`` whose rigorous tail bound is below
  the tolerance.

Tail bound: ``B2`` is orthogonal to constants and to ``u - 1/2`` on [0, 1],
so each cell contributes at most ``C_B / 2 * sup |k''|`` over the cell, where
``C_B = int_0^1 |B2(u)| (u - 1/2)^2 du``. With ``|k''(x)| <= c x^q`` (q < -1)
the sum over cells j >= N is at most ``C_B / 2 * c (N^q + N^(q+1) / (-q-1))``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .core import PathCorrError


class QuadratureError(PathCorrError, ArithmeticError):
    """Requested accuracy is out of reach within the subdivision budget."""


class NegativeRadicand(PathCorrError, ArithmeticError):
    """The integral under the square root of sigma_h_d came out negative."""


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    max_subdivisions: int = 2_000_000
    # Gauss-Legendre orders: (low, high) pair, the difference is the error estimate
    orders: Tuple[int, int] = (12, 20)
    # multiplies the tail cutoff chosen from the analytic bound (testing hook)
    cutoff_scale: float = 1.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class LimitConstants:
    """Constants for one Hurst parameter, with absolute error estimates."""

    hurst: float
    alpha: float
    sigma_h_sq: float
    sigma_h_d: float
    err_sq: float
    err_d: float

    @property
    def sigma_h(self) -> float:
        return math.sqrt(self.sigma_h_sq)

    @property
    def sigma_h_d_sq(self) -> float:
        return self.sigma_h_d ** 2

    @property
    def lower_bound(self) -> float:
        return lower_bound(self.hurst)


def bernoulli_B2(x):
    """Second Bernoulli polynomial ``x^2 - x + 1/6``."""
    return x * x - x + 1.0 / 6.0


def bm_constants() -> Tuple[float, float]:
    """Prefactors of the Brownian sigma functionals (continuous, discrete)."""
    return BM_CONTINUOUS_PREFACTOR, BM_DISCRETE_PREFACTOR


BM_CONTINUOUS_PREFACTOR = 1.0 / math.sqrt(12.0)
BM_DISCRETE_PREFACTOR = 0.25


def _alpha(H: float) -> float:
    if not 0.5 < H < 1.0:
        raise ValueError(f"Hurst parameter must lie in (1/2, 1), got {H}")
    return 2.0 * H - 1.0


def lower_bound(H: float) -> float:
    """Closed-form lower bound of ``sigma_h_sq`` (the polynomial part)."""
    a = _alpha(H)
    return (1.0 - a) * (3.0 - a) / (24.0 * (a + 3.0))


# ---------------------------------------------------------------------------
# quadrature primitives
# ---------------------------------------------------------------------------

def _b2_abs_moment() -> float:
    # int_0^1 |B2(u)| (u - 1/2)^2 du with B2 = w^2 - 1/12, w = u - 1/2
    c = 1.0 / math.sqrt(12.0)
    inner = c ** 3 / 36.0 - c ** 5 / 5.0
    outer = (0.5 ** 5 - c ** 5) / 5.0 - (0.5 ** 3 - c ** 3) / 36.0
    return 2.0 * (inner + outer)


B2_ABS_MOMENT = _b2_abs_moment()


@lru_cache(maxsize=None)
def _unit_gauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * (x + 1.0)
    nodes.setflags(write=False)
    weights = 0.5 * w
    weights.setflags(write=False)
    return nodes, weights


def _tail_bound(c: float, q: float, N: int) -> float:
    """Bound on the cells j >= N when ``|k''(x)| <= c x^q``, q < -1."""
    return 0.5 * B2_ABS_MOMENT * c * (N ** q + N ** (q + 1.0) / (-q - 1.0))


def _cutoff(c: float, q: float, tol: float, cfg: QuadratureConfig) -> int:
    """Smallest N >= 2 with tail bound below ``tol`` (times cutoff_scale)."""
    hi = 2
    while _tail_bound(c, q, hi) > tol:
        hi *= 2
        if hi > 4 * cfg.max_subdivisions:
            break
    lo = max(1, hi // 2)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _tail_bound(c, q, mid) > tol:
            lo = mid
        else:
            hi = mid
    N = max(2, int(math.ceil(hi * cfg.cutoff_scale)))
    if N - 1 > cfg.max_subdivisions:
        raise QuadratureError(
            f"tail bound needs {N} unit cells, budget is {cfg.max_subdivisions}"
        )
    return N


def _cell_series(kernel, N: int, cfg: QuadratureConfig, shape=(), chunk: int = 256):
    """Sum over cells j = 1..N-1 of ``int_0^1 B2(u) kernel(j + u) du``.

    ``kernel`` maps an array of abscissae (broadcast against ``shape``
    followed by a trailing axis) to values. Returns (sum, gl_error), where
    the error compares the two Gauss orders on the first chunk, which holds
    the cells closest to any singularity.
    """
    lo_order, hi_order = cfg.orders
    u, w = _unit_gauss(hi_order)
    wb = w * bernoulli_B2(u)
    total = np.zeros(shape)
    gl_err = np.zeros(shape)
    for start in range(1, N, chunk):
        j = np.arange(start, min(start + chunk, N), dtype=np.float64)
        x = (j[:, None] + u[None, :]).ravel()
        vals = kernel(x)
        vals = vals.reshape(vals.shape[:-1] + (j.size, u.size))
        part = vals @ wb
        total = total + part.sum(axis=-1)
        if start == 1:
            ul, wl = _unit_gauss(lo_order)
            xl = (j[:, None] + ul[None, :]).ravel()
            vl = kernel(xl)
            vl = vl.reshape(vl.shape[:-1] + (j.size, ul.size))
            gl_err = np.abs(part - vl @ (wl * bernoulli_B2(ul))).sum(axis=-1)
    return total, gl_err


def _graded_edges(lo: float, hi: float, levels: int = 30, ratio: float = 0.3):
    """Panel edges on [lo, hi], refined geometrically toward ``lo``.

    The integrands in gamma are bounded but behave like gamma^alpha at 0;
    on geometric panels that behaviour is resolved at exponential rate, and
    the innermost panel is shorter than 1e-15.
    """
    width = hi - lo
    inner = lo + width * ratio ** np.arange(levels, 0, -1)
    return np.concatenate([[lo], inner, [hi]])


def _panel_quad(f, edges, orders):
    """Composite Gauss-Legendre over panels; returns (value, |high - low|).

    ``f`` receives all nodes of one order at once, as a 1-D array.
    """
    results = []
    for order in orders:
        u, w = _unit_gauss(order)
        a = edges[:-1, None]
        h = np.diff(edges)[:, None]
        x = (a + h * u[None, :]).ravel()
        vals = f(x).reshape(h.shape[0], order)
        results.append(float(np.sum((vals * w[None, :]).sum(axis=1) * h[:, 0])))
    return results[1], abs(results[1] - results[0])


# ---------------------------------------------------------------------------
# building blocks in (gamma, alpha)
# ---------------------------------------------------------------------------

def _first_cell_poly(gamma, alpha: float):
    """``int_0^1 (u^2 - u) (gamma + u)^(alpha - 2) du`` in closed form.

    The substitution v = gamma + u turns the integrand into three powers of
    v; the lower-limit terms are written with ``gamma^alpha`` factored out so
    that gamma = 0 is evaluated without 0 * inf.
    """
    g = np.asarray(gamma, dtype=np.float64)
    a = alpha
    v = 1.0 + g
    upper = (v ** (a + 1.0) / (a + 1.0)
             - (2.0 * g + 1.0) * v ** a / a
             + g * (g + 1.0) * v ** (a - 1.0) / (a - 1.0))
    ga = g ** a
    lower = (g * ga / (a + 1.0)
             - (2.0 * g + 1.0) * ga / a
             + (g + 1.0) * ga / (a - 1.0))
    return upper - lower


def _remainder_tail(gamma, alpha: float, tol: float, cfg: QuadratureConfig):
    """Cells j >= 1 of ``int B2({x}) (gamma + x)^(alpha - 2) dx``.

    Returns (value, error bound). ``|k''| <= (2-a)(3-a) x^(a-4)`` for
    gamma >= 0.
    """
    g = np.asarray(gamma, dtype=np.float64)
    p = alpha - 2.0
    c, q = abs(p * (p - 1.0)), p - 2.0
    N = _cutoff(c, q, tol, cfg)
    val, gl_err = _cell_series(lambda x: (g[..., None] + x) ** p, N, cfg, shape=g.shape)
    return val, gl_err + _tail_bound(c, q, N)


def r2_remainder(gamma, alpha: float, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """Euler-Maclaurin remainder ``R2(gamma)``.

    ``alpha * (1 - alpha) / 2 * int_0^inf B2({x}) (gamma + x)^(alpha - 2) dx``
    for 0 < gamma < 1 and 0 < alpha < 1.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    g = np.asarray(gamma, dtype=np.float64)
    if np.any(g <= 0.0):
        raise ValueError("gamma must be positive")
    pref = 0.5 * alpha * (1.0 - alpha)
    tail, err = _remainder_tail(g, alpha, cfg.abs_tol / (2.0 * pref), cfg)
    first = _first_cell_poly(g, alpha) + (g ** (alpha - 1.0) - (1.0 + g) ** (alpha - 1.0)) / (
        6.0 * (1.0 - alpha))
    out = pref * (first + tail)
    if np.max(pref * err) > cfg.abs_tol:
        raise QuadratureError("R2 error estimate above tolerance")
    return float(out) if out.ndim == 0 else out


def _remainder_R(gamma, alpha: float, tol: float, cfg: QuadratureConfig):
    """``R(gamma)`` with its gamma^(alpha-1) singularities cancelled exactly.

    The singular ``-gamma^(alpha-1) / 12`` term and the singular part of
    ``R2(gamma) / alpha`` (from the 1/6 constant of B2 on the first cell)
    are combined by hand into ``-(1 + gamma)^(alpha-1) / 12``.
    """
    a = alpha
    g = np.asarray(gamma, dtype=np.float64)
    tail, err = _remainder_tail(g, a, tol, cfg)
    poly = -g ** (a + 1.0) / (a * (1.0 + a)) + g ** a / (2.0 * a)
    val = poly - (1.0 + g) ** (a - 1.0) / 12.0 + 0.5 * (1.0 - a) * (_first_cell_poly(g, a) + tail)
    return val, 0.5 * (1.0 - a) * err


def _remainder_Rd(gamma, H: float, tol: float, cfg: QuadratureConfig):
    """``R_H^d(gamma)`` with the gamma^(2H-2) singularity cancelled exactly."""
    a = 2.0 * H - 1.0
    g = np.asarray(gamma, dtype=np.float64)
    tail, err = _remainder_tail(g, a, tol, cfg)
    val = (g ** (a + 1.0) / (H * a) - g ** a / a + (1.0 + g) ** (a - 1.0) / 6.0
           - (1.0 - a) * (_first_cell_poly(g, a) + tail))
    return val, (1.0 - a) * err


# ---------------------------------------------------------------------------
# the constants
# ---------------------------------------------------------------------------

def _sigma_h_sq_lemma(H: float, cfg: QuadratureConfig):
    a = _alpha(H)
    pref = a * (a + 1.0)
    inner_tol = cfg.abs_tol / (20.0 * pref)
    inner_err = [0.0]

    def integrand(g):
        r, e = _remainder_R(g, a, inner_tol, cfg)
        inner_err[0] = max(inner_err[0], float(np.max(e)))
        return r * (0.5 - g)

    val, q_err = _panel_quad(integrand, _graded_edges(0.0, 1.0), cfg.orders)
    # int_0^1 |1/2 - gamma| d gamma = 1/4
    err = pref * (q_err + 0.25 * inner_err[0])
    if err > cfg.abs_tol:
        raise QuadratureError(f"sigma_h_sq (lemma route) error {err:.2e} above tolerance")
    return pref * val, err


def _simplified_kernel(x, a):
    return (2.0 * x ** a / a - 2.0 * (x + 1.0) ** a / a
            + x ** (a - 1.0) + (x + 1.0) ** (a - 1.0))


def _sigma_h_sq_simplified(H: float, cfg: QuadratureConfig):
    a = _alpha(H)
    pref = a * (a + 1.0) / 4.0
    # cell [0, 1]: x^s B2(x) exactly via moments; (1 + x)^s parts are smooth
    def xpow_moment(s):
        return 1.0 / (s + 3.0) - 1.0 / (s + 2.0) + 1.0 / (6.0 * (s + 1.0))

    first = 2.0 / a * xpow_moment(a) + xpow_moment(a - 1.0)
    u, w = _unit_gauss(cfg.orders[1])
    first += float(np.sum(w * bernoulli_B2(u) * (-2.0 * (1.0 + u) ** a / a + (1.0 + u) ** (a - 1.0))))
    # k is twice a trapezoid error of g = x^(a-1): |k''| <= |g''''| / 6
    c = abs((a - 1.0) * (a - 2.0) * (a - 3.0) * (a - 4.0)) / 6.0
    q = a - 5.0
    N = _cutoff(c, q, cfg.abs_tol / (20.0 * pref), cfg)
    series, gl_err = _cell_series(lambda x: _simplified_kernel(x, a), N, cfg)
    val = pref * (first + float(series)) + lower_bound(H)
    err = pref * (float(gl_err) + _tail_bound(c, q, N))
    if err > cfg.abs_tol:
        raise QuadratureError(f"sigma_h_sq (simplified route) error {err:.2e} above tolerance")
    return val, err


def _sigma_h_d_sq(H: float, cfg: QuadratureConfig):
    a = _alpha(H)
    pref = H * a / 4.0
    inner_tol = cfg.abs_tol / (20.0 * pref)
    inner_err = [0.0]

    def shifted(g):
        r, e = _remainder_Rd(g + 0.5, H, inner_tol, cfg)
        inner_err[0] = max(inner_err[0], float(np.max(e)))
        return r

    def near_zero(g):
        r, e = _remainder_Rd(g, H, inner_tol, cfg)
        inner_err[0] = max(inner_err[0], float(np.max(e)))
        return r

    v_shift, e_shift = _panel_quad(shifted, np.linspace(0.0, 0.5, 5), cfg.orders)
    v_zero, e_zero = _panel_quad(near_zero, _graded_edges(0.0, 0.5), cfg.orders)
    val = pref * (v_shift - v_zero)
    # each inner evaluation enters over an interval of length 1/2
    err = pref * (e_shift + e_zero + inner_err[0])
    return val, err


def sigma_h_sq_via_lemma(H: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """``alpha (alpha + 1) int_0^1 R(gamma) (1/2 - gamma) d gamma``."""
    return _sigma_h_sq_lemma(H, cfg)[0]


def sigma_h_sq_via_simplified(H: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Single improper integral over (0, inf) plus the closed-form lower bound."""
    return _sigma_h_sq_simplified(H, cfg)[0]


def sigma_h_d_sq(H: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Radicand of :func:`sigma_h_d`."""
    val, err = _sigma_h_d_sq(H, cfg)
    if val < -cfg.abs_tol:
        raise NegativeRadicand(f"sigma_h_d radicand {val:.3e} < 0 at H={H}")
    return val


def sigma_h_d(H: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Constant of the discrete fractional statistic (a square root)."""
    return _sigma_h_d_with_error(H, cfg)[0]


def _sigma_h_d_with_error(H: float, cfg: QuadratureConfig):
    rad, err = _sigma_h_d_sq(H, cfg)
    if rad < -cfg.abs_tol:
        raise NegativeRadicand(f"sigma_h_d radicand {rad:.3e} < 0 at H={H}")
    if rad <= 0.0:
        raise NegativeRadicand(f"sigma_h_d radicand {rad:.3e} is not positive at H={H}")
    val = math.sqrt(rad)
    err_val = err / (2.0 * val)
    if err_val > cfg.abs_tol:
        raise QuadratureError(f"sigma_h_d error {err_val:.2e} above tolerance")
    return val, err_val


_cache: dict = {}
_cache_lock = threading.Lock()


def limit_constants(H: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> LimitConstants:
    """All constants for ``H``; cached per (H, cfg) for the process lifetime.

    ``sigma_h_sq`` comes from the single-integral route;
    :func:`sigma_h_sq_via_lemma` is the independent check.
    """
    key = (float(H), cfg)
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit
    sq, err_sq = _sigma_h_sq_simplified(H, cfg)
    d, err_d = _sigma_h_d_with_error(H, cfg)
    out = LimitConstants(float(H), _alpha(H), sq, d, err_sq, err_d)
    with _cache_lock:
        return _cache.setdefault(key, out)
