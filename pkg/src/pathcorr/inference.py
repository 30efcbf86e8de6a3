"""Standardized discretization-fluctuation statistics and the resulting test.

Four statistics are provided, continuous-proxy and discrete-only for each of
standard and fractional Brownian motion:

    continuous:  (n^e (rho_n - rho)    - n^(e-1) mu)  / sigma
    discrete:    (n^e (rho_n - rho_2n) - n^(e-1) mu_n) / sigma_n

with ``e = 1`` for Brownian motion and ``e = H + 1/2`` for fBm. In the
continuous-proxy mode, ``rho``, ``mu`` and ``sigma`` are computed on a grid
``fine_factor`` times finer than the coarse grid ``n``.

A vanishing sigma (identical or perfectly anti-correlated paths under a
matching null) is reported with ``status == "zero_sigma"`` and an undefined
statistic instead of raising.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .constants import LimitConstants
from .core import (DegeneratePath, GridError, ModelSpec, SampledPathPair,
                   decimate)
from .functionals import (NegativeDiscriminant, _bias_continuous_arrays,
                          _bias_discrete_arrays, _contract, _correlation_arrays,
                          _grad_arrays, _sigma_shape_arrays, _triple_arrays,
                          prefactor)

OK = "ok"
ZERO_SIGMA = "zero_sigma"
DEGENERATE = "degenerate_path"
NEGATIVE_DISCRIMINANT = "negative_discriminant"


class Mode(str, enum.Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    null_r: float = 0.0
    alpha_level: float = 0.05
    mode: Mode = Mode.CONTINUOUS
    coarse_n: int = 100
    fine_factor: int = 100

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not -1.0 <= self.null_r <= 1.0:
            raise ValueError(f"null_r must lie in [-1, 1], got {self.null_r}")
        if not 0.0 < self.alpha_level < 1.0:
            raise ValueError("alpha_level must lie in (0, 1)")
        if self.coarse_n < 2 or self.fine_factor < 1:
            raise ValueError("coarse_n must be >= 2 and fine_factor >= 1")

    @property
    def required_grid(self) -> int:
        """Grid size the input pair must be a multiple of."""
        if self.mode is Mode.CONTINUOUS:
            return self.coarse_n * self.fine_factor
        return 2 * self.coarse_n


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    statistic_z: Optional[float]
    p_value: Optional[float]
    reject: bool
    status: str
    rho: float          # rho (continuous proxy) or rho_2n (discrete)
    rho_n: float
    mu: float           # mu or mu_n
    sigma: float        # sigma^r / sigma^{r,H} or their discrete versions
    n: int
    mode: str
    null_r: float
    alpha_level: float
    model: dict
    reference_triple: tuple = field(default=())
    coarse_triple: tuple = field(default=())
    bias_vector: tuple = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z"] = d.pop("statistic_z")
        return d


def p_value(z: float) -> float:
    """Two-sided standard normal p-value ``2 (1 - Phi(|z|))``."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def _exponents(model: ModelSpec):
    """(scale exponent for rho differences, exponent for mu)."""
    e = model.hurst + 0.5 if model.is_fractional else 1.0
    return e, e - 1.0


def _z_arrays(ref1, ref2, coarse1, coarse2, n, null_r, discrete, pref, model):
    """Batch kernel. ``ref*`` are the fine (continuous) or 2n (discrete) rows.

    Returns a dict of arrays: z, rho_ref, rho_n, mu, sigma, triples and bias
    components, and an integer status code per row (0 ok, 1 zero sigma,
    2 degenerate path, 3 negative discriminant).
    """
    a, d1, d2 = _triple_arrays(ref1, ref2)
    ac, d1c, d2c = _triple_arrays(coarse1, coarse2)
    rho_ref = _correlation_arrays(a, d1, d2)
    rho_n = _correlation_arrays(ac, d1c, d2c)
    if discrete:
        v = _bias_discrete_arrays(coarse1, coarse2)
        ta, t1, t2 = ac, d1c, d2c
    else:
        v = _bias_continuous_arrays(ref1, ref2)
        ta, t1, t2 = a, d1, d2
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = _contract(_grad_arrays(ta, t1, t2), v)
    shape, bad = _sigma_shape_arrays(ta, t1, t2, null_r)
    sigma = pref * shape
    e, e_mu = _exponents(model)
    num = n ** e * (rho_n - rho_ref) - n ** e_mu * mu
    with np.errstate(divide="ignore", invalid="ignore"):
        z = num / sigma
    degenerate = (d1 <= 0) | (d2 <= 0) | (d1c <= 0) | (d2c <= 0)
    status = np.zeros(np.shape(z), dtype=np.int8)
    status = np.where(sigma == 0.0, 1, status)
    status = np.where(bad, 3, status)
    status = np.where(degenerate, 2, status)
    z = np.where(status == 0, z, np.nan)
    return {
        "z": z, "rho": rho_ref, "rho_n": rho_n, "mu": mu, "sigma": sigma,
        "status": status, "ref": (a, d1, d2), "coarse": (ac, d1c, d2c), "v": v,
    }


def _prepare(pair: SampledPathPair, cfg: TestConfig, discrete: bool):
    mode = Mode.DISCRETE if discrete else Mode.CONTINUOUS
    if cfg.mode is not mode:
        cfg = TestConfig(cfg.null_r, cfg.alpha_level, mode, cfg.coarse_n, cfg.fine_factor)
    need = cfg.required_grid
    if pair.n % need:
        raise GridError(f"pair grid n={pair.n} is not a multiple of the required {need}")
    ref = decimate(pair, pair.n // need)
    coarse = decimate(ref, cfg.fine_factor if not discrete else 2)
    return cfg, ref, coarse


def _run(pair, cfg, constants, discrete, expect_fractional):
    if pair.model.is_fractional != expect_fractional:
        kind = "fractional" if expect_fractional else "standard"
        raise ValueError(f"this statistic needs a {kind} Brownian model on the pair")
    cfg, ref, coarse = _prepare(pair, cfg, discrete)
    pref = prefactor(pair.model, constants, discrete)
    out = _z_arrays(
        ref.first.values[None, :], ref.second.values[None, :],
        coarse.first.values[None, :], coarse.second.values[None, :],
        cfg.coarse_n, cfg.null_r, discrete, pref, pair.model,
    )
    code = int(out["status"][0])
    if code == 2:
        raise DegeneratePath("a path is constant on the test grid")
    if code == 3:
        raise NegativeDiscriminant("sigma bracket is negative; inconsistent inputs")
    scalar = {k: float(out[k][0]) for k in ("rho", "rho_n", "mu", "sigma")}
    if code == 1:
        z = pv = None
        status = ZERO_SIGMA
        reject = False
    else:
        z = float(out["z"][0])
        pv = p_value(z)
        status = OK
        reject = pv < cfg.alpha_level
    return TestReport(
        statistic_z=z, p_value=pv, reject=reject, status=status,
        n=cfg.coarse_n, mode=cfg.mode.value, null_r=cfg.null_r,
        alpha_level=cfg.alpha_level, model=pair.model.to_dict(),
        reference_triple=tuple(float(x[0]) for x in out["ref"]),
        coarse_triple=tuple(float(x[0]) for x in out["coarse"]),
        bias_vector=tuple(float(x[0]) for x in out["v"]),
        **scalar,
    )


def z_continuous_bm(pair: SampledPathPair, cfg: TestConfig) -> TestReport:
    """Continuous-proxy statistic for standard Brownian motion."""
    return _run(pair, cfg, None, discrete=False, expect_fractional=False)


def z_continuous_fbm(pair: SampledPathPair, cfg: TestConfig,
                     constants: LimitConstants) -> TestReport:
    """Continuous-proxy statistic for fBm with H in (1/2, 1)."""
    return _run(pair, cfg, constants, discrete=False, expect_fractional=True)


def z_discrete_bm(pair: SampledPathPair, cfg: TestConfig) -> TestReport:
    """``n`` versus ``2n`` statistic for standard Brownian motion."""
    return _run(pair, cfg, None, discrete=True, expect_fractional=False)


def z_discrete_fbm(pair: SampledPathPair, cfg: TestConfig,
                   constants: LimitConstants) -> TestReport:
    """``n`` versus ``2n`` statistic for fBm with H in (1/2, 1)."""
    return _run(pair, cfg, constants, discrete=True, expect_fractional=True)


def run_test(pair: SampledPathPair, cfg: TestConfig,
             constants: Optional[LimitConstants] = None) -> TestReport:
    """Dispatch on the pair's model and ``cfg.mode``."""
    frac = pair.model.is_fractional
    if frac and constants is None:
        from .constants import limit_constants
        constants = limit_constants(pair.model.hurst)
    if cfg.mode is Mode.CONTINUOUS:
        return z_continuous_fbm(pair, cfg, constants) if frac else z_continuous_bm(pair, cfg)
    return z_discrete_fbm(pair, cfg, constants) if frac else z_discrete_bm(pair, cfg)
