"""Seeded replication harness for the null distribution of the statistics.

Each replicate ``i`` draws its pair from ``split_stream(seed, i)``, so the
collected statistic values do not depend on how replicates are distributed
across worker processes. All summaries (moments, KS distance, histogram) are
computed from the same buffered sample, in replicate order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .constants import LimitConstants, limit_constants
from .core import ModelSpec
from .functionals import _correlation_arrays, _triple_arrays, prefactor
from .inference import Mode, _z_arrays
from .simulate import Method, sample_arrays, split_stream

STATUS_NAMES = {1: "zero_sigma", 2: "degenerate_path", 3: "negative_discriminant"}
KS_CRITICAL_01 = 1.63


@dataclass(frozen=True)
class McConfig:
    model: str = "bm"
    hurst: Optional[float] = None
    rho: float = 0.0
    null_rho: Optional[float] = None
    coarse_n: int = 64
    fine_factor: int = 100
    mode: Mode = Mode.CONTINUOUS
    reps: int = 1000
    seed: int = 0
    bins: int = 61
    hist_range: tuple = (-4.0, 4.0)
    workers: int = 1
    method: Method = Method.AUTO

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "method", Method(self.method))
        if self.reps < 100:
            raise ValueError("need at least 100 replications")
        if self.bins < 10:
            raise ValueError("need at least 10 histogram bins")
        if self.coarse_n < 2 or self.fine_factor < 1:
            raise ValueError("coarse_n must be >= 2 and fine_factor >= 1")
        lo, hi = self.hist_range
        if not lo < hi:
            raise ValueError("histogram range must be increasing")
        self.model_spec()  # validates model / hurst / rho

    @property
    def effective_null(self) -> float:
        return self.rho if self.null_rho is None else self.null_rho

    @property
    def statistic(self) -> str:
        kind = "fbm" if self.model == "fbm" else "bm"
        return f"z_{self.mode.value}_{kind}"

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.model, self.hurst, self.rho)

    @property
    def sample_grid(self) -> int:
        if self.mode is Mode.CONTINUOUS:
            return self.coarse_n * self.fine_factor
        return 2 * self.coarse_n


@dataclass(frozen=True, eq=False)
class McSummary:
    mean: float
    std: float
    ks_distance: float
    ks_pass: bool
    bin_edges: np.ndarray
    counts: np.ndarray
    outliers: int
    m_effective: int
    failures: dict
    reps: int
    values: np.ndarray = field(repr=False)
    config: Optional[McConfig] = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, McSummary):
            return NotImplemented
        return (
            np.array_equal(self.values, other.values, equal_nan=True)
            and np.array_equal(self.counts, other.counts)
            and self.failures == other.failures
            and self.mean == other.mean and self.std == other.std
            and self.ks_distance == other.ks_distance
        )

    @property
    def ks_critical(self) -> float:
        return KS_CRITICAL_01 / math.sqrt(max(self.m_effective, 1))

    @property
    def stderr_mean(self) -> float:
        return self.std / math.sqrt(max(self.m_effective, 1))


def _simulate_chunk(args):
    cfg, constants, start, stop = args
    model = cfg.model_spec()
    discrete = cfg.mode is Mode.DISCRETE
    pref = prefactor(model, constants, discrete)
    m = cfg.sample_grid
    step = 2 if discrete else cfg.fine_factor
    z = np.empty(stop - start)
    status = np.empty(stop - start, dtype=np.int8)
    batch = 32
    for lo in range(start, stop, batch):
        hi = min(lo + batch, stop)
        rows = [sample_arrays(model, m, split_stream(cfg.seed, i), cfg.method)
                for i in range(lo, hi)]
        x1 = np.stack([r[0] for r in rows])
        x2 = np.stack([r[1] for r in rows])
        out = _z_arrays(x1, x2, x1[:, ::step], x2[:, ::step], cfg.coarse_n,
                        cfg.effective_null, discrete, pref, model)
        z[lo - start:hi - start] = out["z"]
        status[lo - start:hi - start] = out["status"]
    return start, z, status


def _chunks(reps: int, workers: int):
    size = max(1, math.ceil(reps / (4 * workers)))
    return [(s, min(s + size, reps)) for s in range(0, reps, size)]


def simulate_statistic(cfg: McConfig, constants: Optional[LimitConstants] = None):
    """Raw per-replicate statistic values and status codes, in index order."""
    if cfg.model == "fbm" and constants is None:
        constants = limit_constants(cfg.hurst)
    jobs = [(cfg, constants, s, e) for s, e in _chunks(cfg.reps, cfg.workers)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_simulate_chunk, jobs))
    else:
        parts = [_simulate_chunk(j) for j in jobs]
    z = np.empty(cfg.reps)
    status = np.empty(cfg.reps, dtype=np.int8)
    for start, zs, st in parts:
        z[start:start + zs.size] = zs
        status[start:start + st.size] = st
    return z, status


def histogram(values: np.ndarray, bins: int = 61, hist_range=(-4.0, 4.0)):
    """Counts with out-of-range values clamped into the end bins."""
    lo, hi = hist_range
    edges = np.linspace(lo, hi, bins + 1)
    outliers = int(np.sum((values < lo) | (values > hi)))
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    return edges, counts, outliers


def summarize(values: np.ndarray, status: np.ndarray, cfg: Optional[McConfig] = None,
              bins: int = 61, hist_range=(-4.0, 4.0)) -> McSummary:
    if cfg is not None:
        bins, hist_range = cfg.bins, cfg.hist_range
    good = status == 0
    z = values[good]
    failures = {name: int(np.sum(status == code)) for code, name in STATUS_NAMES.items()}
    failures = {k: v for k, v in failures.items() if v}
    edges, counts, outliers = histogram(z, bins, hist_range)
    if z.size >= 2:
        mean, std = float(np.mean(z)), float(np.std(z, ddof=1))
        ks = float(stats.kstest(z, "norm").statistic)
    else:
        mean = std = ks = float("nan")
    return McSummary(
        mean=mean, std=std, ks_distance=ks,
        ks_pass=bool(ks < KS_CRITICAL_01 / math.sqrt(max(z.size, 1))),
        bin_edges=edges, counts=counts, outliers=outliers,
        m_effective=int(z.size), failures=failures, reps=int(values.size),
        values=values, config=cfg,
    )


def run_mc(cfg: McConfig, constants: Optional[LimitConstants] = None) -> McSummary:
    """Replicate the configured statistic ``cfg.reps`` times and summarize."""
    z, status = simulate_statistic(cfg, constants)
    return summarize(z, status, cfg)


def chi_square_normal(summary: McSummary, min_expected: float = 5.0) -> float:
    """p-value of a chi-square goodness-of-fit of the histogram to N(0, 1).

    End bins absorb the tails (matching the clamping in :func:`histogram`);
    adjacent bins are pooled until each expects at least ``min_expected``.
    """
    edges = summary.bin_edges
    cdf = stats.norm.cdf(edges)
    cdf[0], cdf[-1] = 0.0, 1.0
    expected = np.diff(cdf) * summary.m_effective
    observed = summary.counts.astype(np.float64)
    obs_pooled, exp_pooled = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_pooled.append(o_acc)
            exp_pooled.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0:
        obs_pooled[-1] += o_acc
        exp_pooled[-1] += e_acc
    return float(stats.chisquare(obs_pooled, exp_pooled).pvalue)


def _metadata(s: McSummary) -> dict:
    meta = {
        "mean": s.mean, "std": s.std, "ks_distance": s.ks_distance,
        "ks_pass": s.ks_pass, "ks_critical": s.ks_critical,
        "m_effective": s.m_effective, "reps": s.reps, "outliers": s.outliers,
        "failures": s.failures,
    }
    if s.config is not None:
        c = s.config
        meta.update({
            "statistic": c.statistic, "model": c.model, "hurst": c.hurst,
            "rho": c.rho, "null_rho": c.effective_null, "n": c.coarse_n,
            "fine_factor": c.fine_factor, "mode": c.mode.value, "seed": c.seed,
        })
    return meta


def export_summary(s: McSummary, fmt: str = "csv") -> str:
    """Histogram and moments as CSV (``#`` metadata lines) or JSON."""
    fmt = fmt.lower()
    meta = _metadata(s)
    if fmt == "json":
        doc = dict(meta)
        doc["histogram"] = {
            "bin_edges": s.bin_edges.tolist(),
            "counts": s.counts.tolist(),
        }
        return json.dumps(doc)
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={json.dumps(v)}\n")
    buf.write("bin_left,bin_right,count\n")
    for lo, hi, c in zip(s.bin_edges[:-1], s.bin_edges[1:], s.counts):
        buf.write(f"{float(lo)!r},{float(hi)!r},{int(c)}\n")
    return buf.getvalue()


def parse_summary_csv(text: str):
    """Inverse of the CSV export: (metadata dict, edges array, counts array)."""
    meta = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = json.loads(v)
        elif line.strip():
            rows.append(line)
    reader = csv.DictReader(rows)
    lefts, rights, counts = [], [], []
    for row in reader:
        lefts.append(float(row["bin_left"]))
        rights.append(float(row["bin_right"]))
        counts.append(int(row["count"]))
    edges = np.array(lefts + rights[-1:]) if lefts else np.array([])
    return meta, edges, np.array(counts, dtype=np.int64)


def rate_study(ns: Sequence[int] = (16, 32, 64, 128, 256), reps: int = 2000,
               seed: int = 0, rho: float = 0.0, fine_factor: int = 100):
    """Median ``|rho_n - rho|`` per ``n`` for Brownian pairs, and the log-log slope.

    ``rho`` is proxied on the grid ``fine_factor * max(ns)`` and every
    ``rho_n`` is taken from decimations of the same pair.
    """
    ns = sorted(int(n) for n in ns)
    m = fine_factor * ns[-1]
    for n in ns:
        if m % n:
            raise ValueError(f"n={n} does not divide the reference grid {m}")
    model = ModelSpec.bm(rho)
    diffs = np.empty((reps, len(ns)))
    for i in range(reps):
        x1, x2 = sample_arrays(model, m, split_stream(seed, i))
        ref = _correlation_arrays(*_triple_arrays(x1, x2))
        for j, n in enumerate(ns):
            step = m // n
            diffs[i, j] = abs(_correlation_arrays(*_triple_arrays(x1[::step], x2[::step])) - ref)
    medians = np.median(diffs, axis=0)
    slope = float(np.polyfit(np.log(ns), np.log(medians), 1)[0])
    return np.array(ns), medians, slope
