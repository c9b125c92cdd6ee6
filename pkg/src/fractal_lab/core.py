"""Partitions, sampled complex functions and discrete seminorm estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import GridMismatchError, InvalidParameterError

# Above this size the Hölder sup switches from all pairs to windowed + strided pairs.
EXACT_PAIR_LIMIT = 4096
SHORT_RANGE_WINDOW = 512
LONG_RANGE_PAIRS = 10**6


@dataclass(frozen=True)
class Partition:
    """Strictly increasing knots ``x_1 < ... < x_N`` with ``N >= 3``."""

    knots: Tuple[float, ...]

    def __post_init__(self):
        knots = tuple(float(x) for x in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 3:
            raise InvalidParameterError("a partition needs at least 3 knots")
        if not all(np.isfinite(knots)):
            raise InvalidParameterError("knots must be finite")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InvalidParameterError("knots must be strictly increasing")

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    @property
    def n_maps(self) -> int:
        return len(self.knots) - 1

    @property
    def domain(self) -> Tuple[float, float]:
        return self.knots[0], self.knots[-1]

    @property
    def length(self) -> float:
        return self.knots[-1] - self.knots[0]

    def subinterval(self, k: int) -> Tuple[float, float]:
        """``J_k`` for zero-based ``k``."""
        return self.knots[k], self.knots[k + 1]

    def is_uniform(self, rtol: float = 1e-12) -> bool:
        widths = np.diff(self.knots)
        return bool(np.allclose(widths, widths[0], rtol=rtol, atol=0.0))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples on the uniform grid ``t_j = a + j (b - a) / (M - 1)``."""

    domain: Tuple[float, float]
    values: np.ndarray

    def __post_init__(self):
        a, b = (float(v) for v in self.domain)
        if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
            raise InvalidParameterError(f"invalid domain {self.domain!r}")
        values = np.array(self.values, dtype=np.complex128)
        if values.ndim != 1 or values.size < 2:
            raise InvalidParameterError("need at least 2 samples")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("samples must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "domain", (a, b))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func, domain, M):
        a, b = domain
        t = np.linspace(a, b, M)
        return cls((a, b), np.asarray(func(t), dtype=np.complex128) * np.ones(M))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        a, b = self.domain
        return (b - a) / (self.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.domain[0], self.domain[1], self.size)

    @property
    def real(self) -> "SampledFunction":
        return SampledFunction(self.domain, self.values.real)

    @property
    def imag(self) -> "SampledFunction":
        return SampledFunction(self.domain, self.values.imag)

    def same_grid(self, other: "SampledFunction") -> bool:
        return self.domain == other.domain and self.size == other.size

    def check_grid(self, other: "SampledFunction"):
        if not self.same_grid(other):
            raise GridMismatchError(
                f"grids differ: {self.domain}/{self.size} vs {other.domain}/{other.size}"
            )

    def evaluate(self, t) -> np.ndarray:
        """Piecewise-linear evaluation; exact at grid points."""
        a = self.domain[0]
        t = np.asarray(t, dtype=float)
        pos = np.clip((t - a) / self.step, 0.0, self.size - 1)
        # positions within rounding of a grid index read that sample exactly
        nearest = np.rint(pos)
        snap = np.abs(pos - nearest) <= 1e-9
        pos = np.where(snap, nearest, pos)
        i0 = np.minimum(np.floor(pos).astype(np.int64), self.size - 2)
        w = pos - i0
        v = self.values
        out = v[i0] * (1.0 - w) + v[i0 + 1] * w
        exact = snap | (w == 0.0)
        if np.any(exact):
            idx = np.minimum(nearest.astype(np.int64), self.size - 1)
            out = np.where(exact, v[idx], out)
        return out

    def __add__(self, other):
        if isinstance(other, SampledFunction):
            self.check_grid(other)
            return SampledFunction(self.domain, self.values + other.values)
        return SampledFunction(self.domain, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SampledFunction):
            self.check_grid(other)
            return SampledFunction(self.domain, self.values - other.values)
        return SampledFunction(self.domain, self.values - other)

    def __mul__(self, scalar):
        return SampledFunction(self.domain, self.values * scalar)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return self.same_grid(other) and bool(np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True)
class SeminormEstimate:
    value: float
    exponent: float
    kind: str

    def __post_init__(self):
        if self.kind not in {"holder-seminorm", "sup-norm", "lipschitz", "holder-full-norm"}:
            raise InvalidParameterError(f"unknown seminorm kind {self.kind!r}")
        if not self.value >= 0:
            raise InvalidParameterError("seminorm value must be nonnegative")


@dataclass(frozen=True)
class VariationResult:
    total_variation: float
    bv_norm: float


def _check_sigma(sigma):
    if not 0.0 < sigma <= 1.0:
        raise InvalidParameterError(f"exponent must lie in (0, 1], got {sigma}")


def _long_range_pairs(M, min_offset, n_pairs):
    """Deterministic strided (offset, starts) pairs with offsets >= ``min_offset``."""
    n_offsets = int(np.ceil(np.sqrt(n_pairs)))
    offsets = np.unique(np.linspace(min_offset, M - 1, n_offsets).astype(np.int64))
    per_offset = max(1, n_pairs // offsets.size)
    for d in offsets:
        starts = np.unique(np.linspace(0, M - 1 - d, min(per_offset, M - d)).astype(np.int64))
        yield int(d), starts


def _pair_sup(values: np.ndarray, step: float, sigma: float) -> float:
    if np.iscomplexobj(values) and not np.any(values.imag):
        values = values.real
    M = values.size
    if sigma == 1.0:
        # |v[i+d] - v[i]| <= d max|v[k+1] - v[k]|, so adjacent pairs attain the sup
        return float(np.abs(np.diff(values)).max() / step)
    best = 0.0
    if M <= EXACT_PAIR_LIMIT:
        short = M - 1
    else:
        short = SHORT_RANGE_WINDOW
    for d in range(1, short + 1):
        diff = np.abs(values[d:] - values[:-d]).max()
        best = max(best, diff / (d * step) ** sigma)
    if M > EXACT_PAIR_LIMIT:
        for d, starts in _long_range_pairs(M, short + 1, LONG_RANGE_PAIRS):
            diff = np.abs(values[starts + d] - values[starts]).max()
            best = max(best, diff / (d * step) ** sigma)
    return float(best)


def holder_seminorm(f: SampledFunction, sigma: float) -> SeminormEstimate:
    """Discrete lower bound for ``sup |f(s) - f(t)| / |s - t|**sigma``.

    All pairs are used up to 4096 samples. Larger grids use every pair within
    512 samples plus about 10**6 deterministic long-range pairs.
    """
    _check_sigma(sigma)
    return SeminormEstimate(_pair_sup(f.values, f.step, sigma), sigma, "holder-seminorm")


def lipschitz_estimate(f: SampledFunction) -> SeminormEstimate:
    """Discrete Lipschitz constant; exact over all sample pairs, computed from adjacent ones."""
    return SeminormEstimate(_pair_sup(f.values, f.step, 1.0), 1.0, "lipschitz")


def sup_norm(f: SampledFunction) -> float:
    return float(np.abs(f.values).max())


def sup_distance(f: SampledFunction, g: SampledFunction) -> float:
    f.check_grid(g)
    return float(np.abs(f.values - g.values).max())


def holder_norm(f: SampledFunction, sigma: float) -> SeminormEstimate:
    """``||f||_inf + [f]_sigma``."""
    semi = holder_seminorm(f, sigma)
    return SeminormEstimate(sup_norm(f) + semi.value, sigma, "holder-full-norm")


def total_variation(f: SampledFunction) -> VariationResult:
    tv = float(np.abs(np.diff(f.values)).sum())
    return VariationResult(tv, float(abs(f.values[0])) + tv)
