"""Exact sampling of correlated Brownian / fractional Brownian path pairs.

Randomness comes from a Philox counter-based stream keyed by a 64-bit seed;
Gaussian variates are produced by inverse-CDF transformation of 53-bit
uniforms, so a given seed yields bit-identical output regardless of the
order in which replicates are executed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import ndtri

from .core import (ModelSpec, PathCorrError, SampledPath, SampledPathPair,
                   UniformGrid, next_power_of_two)

CHOLESKY_MAX = 2048
SPECTRUM_CLAMP = 1e-10


class EmbeddingFailure(PathCorrError, RuntimeError):
    """Circulant embedding is not nonnegative definite and m is too large for Cholesky."""


class InvalidR(PathCorrError, ValueError):
    """Correlation coefficient outside [-1, 1]."""


class Method(str, enum.Enum):
    CIRCULANT = "circulant"
    CHOLESKY = "cholesky"
    AUTO = "auto"


@dataclass(frozen=True)
class GeneratorConfig:
    model: ModelSpec
    n_fine: int
    seed: int = 0
    method: Method = Method.AUTO

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if int(self.n_fine) != self.n_fine or self.n_fine < 2:
            raise ValueError(f"n_fine must be an integer >= 2, got {self.n_fine}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        r = self.model.true_r
        if r is None:
            raise InvalidR("the generating model needs a known true_r")
        if not -1.0 <= r <= 1.0:
            raise InvalidR(f"true_r must lie in [-1, 1], got {r}")


def fgn_autocov(H: float, k):
    """Autocovariance of unit-step fractional Gaussian noise at lag ``k``."""
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2.0 * H
    out = 0.5 * (np.abs(k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)
    return float(out) if out.ndim == 0 else out


def split_stream(seed: int, replicate_index: int) -> int:
    """Derive the seed of replicate ``replicate_index`` from a base seed.

    The derived seed is one Philox block keyed by ``seed`` at counter
    ``replicate_index``, i.e. a keyed bijection of the index.
    """
    bg = np.random.Philox(key=int(seed) % 2**64, counter=[int(replicate_index) % 2**64, 0, 0, 0])
    return int(bg.random_raw())


def standard_normals(seed: int, size: int) -> np.ndarray:
    """``size`` i.i.d. N(0, 1) variates by inverse CDF of a Philox stream."""
    raw = np.random.Philox(key=int(seed) % 2**64).random_raw(size)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


@lru_cache(maxsize=16)
def _circulant_sqrt_eigs(H: float, m: int):
    """sqrt of eigenvalues / L for the minimal power-of-two embedding of m lags."""
    L = next_power_of_two(2 * (m - 1))
    half = L // 2
    c = fgn_autocov(H, np.arange(half + 1))
    row = np.concatenate([c, c[half - 1:0:-1]])
    lam = np.fft.fft(row).real
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.min(lam) < -SPECTRUM_CLAMP * scale:
        return None
    lam = np.where(lam < 0.0, 0.0, lam)
    out = np.sqrt(lam / L)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=4)
def _cholesky_factor(H: float, m: int):
    cov = toeplitz(fgn_autocov(H, np.arange(m)))
    out = cholesky(cov, lower=True)
    out.setflags(write=False)
    return out


def _resolve_method(H: float, m: int, method: Method) -> Method:
    if method is Method.CHOLESKY:
        return method
    if _circulant_sqrt_eigs(H, m) is not None:
        return Method.CIRCULANT
    if method is Method.AUTO and m <= CHOLESKY_MAX:
        return Method.CHOLESKY
    raise EmbeddingFailure(
        f"circulant embedding of fGn(H={H}) with m={m} is not nonnegative definite"
    )


def _fgn_pair(H: float, m: int, seed: int, method: Method):
    """Two independent unit-step fGn sequences of length m."""
    method = _resolve_method(H, m, method)
    if method is Method.CIRCULANT:
        s = _circulant_sqrt_eigs(H, m)
        L = s.size
        z = standard_normals(seed, 2 * L)
        y = np.fft.fft(s * (z[:L] + 1j * z[L:]))
        # real and imaginary parts are independent draws with the target law
        return y.real[:m], y.imag[:m]
    low = _cholesky_factor(H, m)
    z = standard_normals(seed, 2 * m)
    return low @ z[:m], low @ z[m:]


def _increments(model: ModelSpec, m: int, seed: int, method: Method):
    if model.is_fractional:
        e1, e2 = _fgn_pair(model.hurst, m, seed, method)
        scale = m ** (-model.hurst)
    else:
        z = standard_normals(seed, 2 * m)
        e1, e2 = z[:m], z[m:]
        scale = 1.0 / math.sqrt(m)
    return scale * e1, scale * e2


def _paths_from_increments(d1, d2, r):
    x1 = np.concatenate([[0.0], np.cumsum(d1)])
    xp = np.concatenate([[0.0], np.cumsum(d2)])
    if r == 1.0:
        return x1, x1.copy()
    if r == -1.0:
        return x1, -x1
    return x1, r * x1 + math.sqrt(1.0 - r * r) * xp


def sample_arrays(model: ModelSpec, m: int, seed: int, method: Method = Method.AUTO):
    """Raw ``(x1, x2)`` arrays of length m + 1 for one replicate."""
    d1, d2 = _increments(model, m, seed, Method(method))
    return _paths_from_increments(d1, d2, model.true_r)


def sample_pair(cfg: GeneratorConfig) -> SampledPathPair:
    """Draw one pair with correlation ``cfg.model.true_r`` on grid ``n_fine``."""
    x1, x2 = sample_arrays(cfg.model, int(cfg.n_fine), cfg.seed, cfg.method)
    grid = UniformGrid(int(cfg.n_fine))
    model = ModelSpec(cfg.model.kind, cfg.model.hurst, cfg.model.true_r, cfg.seed)
    return SampledPathPair(SampledPath(grid, x1), SampledPath(grid, x2), model)


def simulate(kind: str = "bm", n: int = 1000, rho: float = 0.0, hurst: Optional[float] = None,
             seed: int = 0, method: str = "auto") -> SampledPathPair:
    """Convenience wrapper around :func:`sample_pair`."""
    model = ModelSpec(kind, hurst, rho, seed)
    return sample_pair(GeneratorConfig(model, n, seed, Method(method)))
