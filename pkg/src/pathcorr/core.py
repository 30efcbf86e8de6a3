"""Path containers on uniform grids of [0, 1], decimation, and file I/O.

Grids are stored by their subinterval count ``n``; the points ``k / n`` are
derived on demand so that index arithmetic never depends on floating time
stamps.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Optional, Union

import numpy as np


class PathCorrError(Exception):
    """Base class for all domain errors raised by this package."""


class GridError(PathCorrError, ValueError):
    """Malformed or non-uniform time grid."""


class NonDivisibleDecimation(GridError):
    """Decimation factor does not divide the grid size."""


class DegeneratePath(PathCorrError, ArithmeticError):
    """A path is constant on the grid, so its empirical variance vanishes."""


class ModelKind(str, enum.Enum):
    STANDARD_BM = "bm"
    FRACTIONAL_BM = "fbm"


@dataclass(frozen=True)
class ModelSpec:
    """Declared generating model of a pair of paths.

    ``true_r`` is the correlation coefficient between the two driving
    processes when known; ``None`` means unknown.
    """

    kind: ModelKind = ModelKind.STANDARD_BM
    hurst: Optional[float] = None
    true_r: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is ModelKind.FRACTIONAL_BM:
            if self.hurst is None or not (0.5 < self.hurst < 1.0):
                raise ValueError(f"fractional model needs hurst in (1/2, 1), got {self.hurst!r}")
        elif self.hurst is not None:
            raise ValueError("hurst is only meaningful for the fractional model")
        if self.true_r is not None and not (-1.0 <= self.true_r <= 1.0):
            raise ValueError(f"true_r must lie in [-1, 1], got {self.true_r!r}")
        if self.seed is not None and not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")

    @classmethod
    def bm(cls, true_r=None, seed=None) -> "ModelSpec":
        return cls(ModelKind.STANDARD_BM, None, true_r, seed)

    @classmethod
    def fbm(cls, hurst, true_r=None, seed=None) -> "ModelSpec":
        return cls(ModelKind.FRACTIONAL_BM, hurst, true_r, seed)

    @property
    def is_fractional(self) -> bool:
        return self.kind is ModelKind.FRACTIONAL_BM

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.hurst is not None:
            out["hurst"] = self.hurst
        if self.true_r is not None:
            out["true_r"] = self.true_r
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            ModelKind(d.get("kind", "bm")),
            d.get("hurst"),
            d.get("true_r"),
            d.get("seed"),
        )


@dataclass(frozen=True)
class UniformGrid:
    """The points ``k / n``, ``k = 0..n``, of [0, 1]."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise GridError(f"grid size must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.n < 2:
            raise GridError(f"grid needs at least 2 subintervals, got n={self.n}")

    @property
    def step(self) -> float:
        return 1.0 / self.n

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SampledPath:
    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.n + 1,):
            raise GridError(
                f"expected {self.grid.n + 1} samples for n={self.grid.n}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values) -> "SampledPath":
        values = np.asarray(values, dtype=np.float64)
        return cls(UniformGrid(values.size - 1), values)

    @property
    def terminal(self) -> float:
        return float(self.values[-1])

    def __eq__(self, other):
        if not isinstance(other, SampledPath):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class SampledPathPair:
    first: SampledPath
    second: SampledPath
    model: ModelSpec = field(default_factory=ModelSpec)

    def __post_init__(self):
        if self.first.grid != self.second.grid:
            raise GridError("both paths of a pair must share one grid")

    @classmethod
    def from_arrays(cls, x1, x2, model: Optional[ModelSpec] = None) -> "SampledPathPair":
        return cls(
            SampledPath.from_values(x1),
            SampledPath.from_values(x2),
            model if model is not None else ModelSpec(),
        )

    @property
    def grid(self) -> UniformGrid:
        return self.first.grid

    @property
    def n(self) -> int:
        return self.first.grid.n

    def __eq__(self, other):
        if not isinstance(other, SampledPathPair):
            return NotImplemented
        return (
            self.first == other.first
            and self.second == other.second
            and self.model == other.model
        )


def decimate(path, factor: int):
    """Keep every ``factor``-th sample, starting from index 0.

    Accepts a :class:`SampledPath` or a :class:`SampledPathPair` and returns
    the same kind of object on the grid ``n / factor``.
    """
    if isinstance(path, SampledPathPair):
        return SampledPathPair(
            decimate(path.first, factor), decimate(path.second, factor), path.model
        )
    factor = int(factor)
    if factor < 1:
        raise ValueError("decimation factor must be positive")
    n = path.grid.n
    if n % factor:
        raise NonDivisibleDecimation(f"factor {factor} does not divide n={n}")
    if factor == 1:
        return path
    return SampledPath(UniformGrid(n // factor), path.values[::factor])


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

_GRID_RTOL = 1e-12


def _grid_from_times(t: np.ndarray) -> UniformGrid:
    if t.size < 3:
        raise GridError("need at least three grid points")
    if t[0] != 0.0:
        raise GridError("grid must start at t=0")
    if t[-1] != 1.0:
        raise GridError("grid must end at t=1")
    grid = UniformGrid(t.size - 1)
    dt = np.diff(t)
    if np.max(np.abs(dt - grid.step)) > _GRID_RTOL * grid.step:
        raise GridError("time grid is not uniform (duplicate, missing or unsorted rows?)")
    return grid


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("path values must be finite (NaN or Inf in input)")


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _fmt(x: float) -> str:
    return repr(float(x))


def dump_pair(pair: SampledPathPair, fmt: str = "csv") -> str:
    """Serialize a pair to CSV (``t,x1,x2``) or JSON text."""
    fmt = fmt.lower()
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("t,x1,x2\n")
        n = pair.n
        for k, (a, b) in enumerate(zip(pair.first.values, pair.second.values)):
            buf.write(f"{_fmt(k / n)},{_fmt(a)},{_fmt(b)}\n")
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "n": pair.n,
            "model": pair.model.to_dict(),
            "x1": pair.first.values.tolist(),
            "x2": pair.second.values.tolist(),
        }
        return json.dumps(doc)
    raise ValueError(f"unknown format {fmt!r}")


def save_pair(pair: SampledPathPair, dest: Union[str, IO], fmt: str = "csv") -> None:
    text = dump_pair(pair, fmt)
    if isinstance(dest, str):
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    else:
        dest.write(text)


def load_pair(source, fmt: str = "csv", model: Optional[ModelSpec] = None) -> SampledPathPair:
    """Parse a pair from CSV or JSON text, bytes or a readable stream.

    CSV carries no model metadata, so ``model`` (default: standard BM,
    unknown ``r``) is attached. For JSON the embedded ``model`` object wins
    unless ``model`` is given explicitly.
    """
    text = _read_text(source)
    fmt = fmt.lower()
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        rows = [r for r in rows if r]
        if not rows or [c.strip() for c in rows[0]] != ["t", "x1", "x2"]:
            raise GridError("CSV header must be exactly 't,x1,x2'")
        try:
            body = np.array([[float(c) for c in r] for r in rows[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"unparseable CSV value: {exc}") from None
        if body.ndim != 2 or body.shape[1] != 3:
            raise GridError("every CSV row needs exactly three fields")
        t, x1, x2 = body.T
        if not np.all(np.isfinite(t)):
            raise GridError("non-finite time stamp")
        grid = _grid_from_times(t)
        _check_finite(x1, x2)
        return SampledPathPair(
            SampledPath(grid, x1), SampledPath(grid, x2),
            model if model is not None else ModelSpec(),
        )
    if fmt == "json":
        doc = json.loads(text)
        try:
            n = doc["n"]
            x1 = np.array(doc["x1"], dtype=np.float64)
            x2 = np.array(doc["x2"], dtype=np.float64)
        except KeyError as exc:
            raise GridError(f"JSON pair is missing field {exc}") from None
        grid = UniformGrid(n)
        if x1.shape != (grid.n + 1,) or x2.shape != (grid.n + 1,):
            raise GridError("x1 and x2 must each hold n+1 values")
        _check_finite(x1, x2)
        if model is None:
            model = ModelSpec.from_dict(doc.get("model", {}))
        return SampledPathPair(SampledPath(grid, x1), SampledPath(grid, x2), model)
    raise ValueError(f"unknown format {fmt!r}")


def read_pair(path: str, fmt: Optional[str] = None, model: Optional[ModelSpec] = None) -> SampledPathPair:
    if fmt is None:
        fmt = "json" if path.lower().endswith(".json") else "csv"
    with open(path, "rb") as fh:
        return load_pair(fh, fmt, model)


def is_power_of_two(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


def next_power_of_two(k: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(k, 1))))
