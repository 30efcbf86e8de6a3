"""Deterministic path functionals: empirical moments, correlation, the
gradient of ``F(a, b, c) = a / sqrt(b c)``, bias vectors and conditional
standard deviations.

Every public function has a private ``_*_arrays`` twin that works on stacked
samples of shape ``(..., n + 1)``; the Monte Carlo harness uses those so that
one replicate and a batch of replicates follow exactly the same arithmetic.

Sums over grid points rely on numpy's pairwise summation, and variances are
formed from centered samples (two-pass) rather than ``E[x^2] - E[x]^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DegeneratePath, ModelSpec, PathCorrError, SampledPathPair
from .constants import LimitConstants, bm_constants

CLAMP_BAND = 1e-12


class NegativeDiscriminant(PathCorrError, ArithmeticError):
    """A bracket under the square root of sigma is clearly negative."""


@dataclass(frozen=True)
class FunctionalTriple:
    """Empirical covariance ``a`` and variances ``d1``, ``d2`` of a pair."""

    a: float
    d1: float
    d2: float

    def __post_init__(self):
        for name in ("d1", "d2"):
            v = getattr(self, name)
            if -1e-14 < v < 0.0:
                object.__setattr__(self, name, 0.0)
            elif v < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.d1, self.d2])

    @property
    def degenerate(self) -> bool:
        return self.d1 <= 0.0 or self.d2 <= 0.0


# ---------------------------------------------------------------------------
# array kernels
# ---------------------------------------------------------------------------

def _triple_arrays(x1: np.ndarray, x2: np.ndarray):
    """(a, d1, d2) using the left points k = 0..n-1 of each row."""
    f = x1[..., :-1]
    g = x2[..., :-1]
    fc = f - f.mean(axis=-1, keepdims=True)
    gc = g - g.mean(axis=-1, keepdims=True)
    d1 = np.mean(fc * fc, axis=-1)
    d2 = np.mean(gc * gc, axis=-1)
    a = np.mean(fc * gc, axis=-1)
    # a constant path must give an exactly zero variance, not roundoff
    d1 = np.where(np.ptp(f, axis=-1) == 0.0, 0.0, d1)
    d2 = np.where(np.ptp(g, axis=-1) == 0.0, 0.0, d2)
    a = np.where((d1 == 0.0) | (d2 == 0.0), 0.0, a)
    return a, d1, d2


def _correlation_arrays(a, d1, d2):
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = a / np.sqrt(d1 * d2)
    return np.clip(rho, -1.0, 1.0)


def _grad_arrays(a, d1, d2):
    with np.errstate(divide="ignore", invalid="ignore"):
        s = 1.0 / np.sqrt(d1 * d2)
        return s, -0.5 * a * s / d1, -0.5 * a * s / d2


def _bias_core(x1, x2, fbar, gbar):
    # written with f(1) - f(0) so that shifting a path leaves it unchanged;
    # for paths starting at 0 this is the usual f(1), g(1) form
    f0, g0 = x1[..., 0], x2[..., 0]
    f1, g1 = x1[..., -1], x2[..., -1]
    df, dg = f1 - f0, g1 - g0
    return (
        0.5 * (df * gbar + dg * fbar - (f1 * g1 - f0 * g0)),
        df * (fbar - 0.5 * (f1 + f0)),
        dg * (gbar - 0.5 * (g1 + g0)),
    )


def _bias_continuous_arrays(x1, x2):
    fbar = x1[..., :-1].mean(axis=-1)
    gbar = x2[..., :-1].mean(axis=-1)
    return _bias_core(x1, x2, fbar, gbar)


def _bias_discrete_arrays(x1, x2):
    # the n-grid vector is half the continuous one with discrete means
    v = _bias_continuous_arrays(x1, x2)
    return 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]


def _contract(grad, v):
    return grad[0] * v[0] + grad[1] * v[1] + grad[2] * v[2]


def _sigma_shape_arrays(a, d1, d2, r):
    """sqrt((d1 d2 - a^2)(d1 + d2 - 2 r a)) / (d1 d2), with clamping.

    Both brackets are compared to their natural scale (d1 d2 and d1 + d2);
    relative values in (-CLAMP_BAND, CLAMP_BAND) are treated as exact zeros.
    Returns the shape and a boolean mask of clearly negative brackets.
    """
    prod = d1 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        first = (prod - a * a) / prod
        second = (d1 + d2 - 2.0 * r * a) / (d1 + d2)
        bad = (first < -CLAMP_BAND) | (second < -CLAMP_BAND)
        first = np.where(first < CLAMP_BAND, 0.0, first)
        second = np.where(second < CLAMP_BAND, 0.0, second)
        shape = np.sqrt(first * second * (d1 + d2) / prod)
    return shape, bad


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------

def _pair_arrays(pair: SampledPathPair):
    return pair.first.values, pair.second.values


def discrete_triple(pair: SampledPathPair) -> FunctionalTriple:
    """Empirical (covariance, variance, variance) on the pair's own grid."""
    a, d1, d2 = _triple_arrays(*_pair_arrays(pair))
    return FunctionalTriple(float(a), float(d1), float(d2))


def fine_triple(pair: SampledPathPair) -> FunctionalTriple:
    """Continuous-time functionals ``A``, ``D`` proxied by Riemann sums.

    The pair is taken to be sampled on the fine grid that stands in for
    continuous observation, so the arithmetic is that of
    :func:`discrete_triple` on that grid.
    """
    return discrete_triple(pair)


def _require_nondegenerate(t: FunctionalTriple):
    if t.degenerate:
        raise DegeneratePath("empirical variance is zero: a path is constant on the grid")


def correlation(triple: FunctionalTriple) -> float:
    _require_nondegenerate(triple)
    return float(_correlation_arrays(triple.a, triple.d1, triple.d2))


def grad_F(triple: FunctionalTriple) -> np.ndarray:
    _require_nondegenerate(triple)
    return np.array(_grad_arrays(triple.a, triple.d1, triple.d2), dtype=np.float64)


@dataclass(frozen=True)
class BiasVector:
    """Three-component bias vector plus the triple used to contract it."""

    v: tuple
    triple: FunctionalTriple

    @property
    def mu_scalar(self) -> float:
        return float(np.dot(grad_F(self.triple), self.v))


def bias_vector_continuous(pair: SampledPathPair) -> BiasVector:
    """Bias vector with path means taken as left-Riemann fine-grid means."""
    v = _bias_continuous_arrays(*_pair_arrays(pair))
    return BiasVector(tuple(float(c) for c in v), fine_triple(pair))


def bias_vector_discrete(pair: SampledPathPair) -> BiasVector:
    """Bias vector built only from the samples ``k / n``, ``k = 0..n``."""
    v = _bias_discrete_arrays(*_pair_arrays(pair))
    return BiasVector(tuple(float(c) for c in v), discrete_triple(pair))


def prefactor(model: ModelSpec, constants: Optional[LimitConstants], discrete: bool) -> float:
    """Model-dependent constant in front of the sigma shape."""
    if not model.is_fractional:
        cont, disc = bm_constants()
        return disc if discrete else cont
    if constants is None:
        raise ValueError("the fractional model needs LimitConstants")
    if not math.isclose(constants.hurst, model.hurst, rel_tol=0, abs_tol=1e-15):
        raise ValueError(
            f"constants are for H={constants.hurst}, model declares H={model.hurst}"
        )
    return constants.sigma_h_d if discrete else constants.sigma_h


def _sigma(triple, r, model, constants, discrete):
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [-1, 1], got {r}")
    _require_nondegenerate(triple)
    shape, bad = _sigma_shape_arrays(triple.a, triple.d1, triple.d2, r)
    if bool(bad):
        raise NegativeDiscriminant(f"negative bracket for triple {triple} and r={r}")
    return prefactor(model, constants, discrete) * float(shape)


def sigma_continuous(triple: FunctionalTriple, r: float, model: ModelSpec,
                     constants: Optional[LimitConstants] = None) -> float:
    """Conditional standard deviation of the continuous-observation limit."""
    return _sigma(triple, r, model, constants, discrete=False)


def sigma_discrete(triple: FunctionalTriple, r: float, model: ModelSpec,
                   constants: Optional[LimitConstants] = None) -> float:
    """Conditional standard deviation for the ``n`` versus ``2n`` comparison."""
    return _sigma(triple, r, model, constants, discrete=True)
