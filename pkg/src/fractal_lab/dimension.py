"""Box-counting dimension estimates, Moran roots and Hausdorff distance."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .core import SampledFunction, SeminormEstimate
from .errors import (
    DegenerateFitError,
    DeltaTooSmallError,
    DimensionMismatchError,
    InsufficientResolutionError,
    InvalidParameterError,
    InvalidRatioError,
    InvariantViolation,
)
from .fif import GraphCloud

MIN_SAMPLES_PER_COLUMN = 10
DEFAULT_FIRST_SCALE = 4
MORAN_RESIDUAL = 1e-12
MORAN_MAX_BISECTIONS = 100
CLIP_TOLERANCE = 1e-9


def worker_count() -> int:
    """Thread cap from ``FRACTAL_LAB_THREADS`` (0 or unset means automatic)."""
    raw = os.environ.get("FRACTAL_LAB_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else min(8, os.cpu_count() or 1)


def _component(f: SampledFunction, component: str) -> np.ndarray:
    if component == "real":
        return f.values.real
    if component == "imag":
        return f.values.imag
    raise InvalidParameterError(f"component must be 'real' or 'imag', got {component!r}")


def _column_bounds(size: int, step: float, length: float, delta: float):
    """Inclusive sample ranges ``[lo_r, hi_r]`` of the columns ``[r delta, (r+1) delta]``."""
    m = int(math.ceil(length / delta - 1e-9))
    r = np.arange(m)
    ratio = delta / step
    lo = np.ceil(r * ratio - 1e-9).astype(np.int64)
    hi = np.minimum(np.floor((r + 1) * ratio + 1e-9).astype(np.int64), size - 1)
    return lo, hi


def column_oscillations(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``max - min`` of ``values`` over each inclusive range ``[lo_r, hi_r]``.

    Consecutive ranges must overlap or touch (``hi_r >= lo_{r+1} - 1``).
    """
    mx = np.maximum.reduceat(values, lo)
    mn = np.minimum.reduceat(values, lo)
    mx = np.maximum(mx, values[hi])
    mn = np.minimum(mn, values[hi])
    return mx - mn


def box_count_2d(f: SampledFunction, delta: float, component: str = "real") -> int:
    """Column-oscillation count ``sum_r max(1, ceil(R_f[r delta, (r+1) delta] / delta))``."""
    values = _component(f, component)
    length = f.domain[1] - f.domain[0]
    if not 0 < delta <= length / 2:
        raise InvalidParameterError("delta must lie in (0, |J|/2]")
    if f.step > delta / MIN_SAMPLES_PER_COLUMN * (1 + 1e-9):
        raise DeltaTooSmallError(
            f"delta={delta:g} leaves fewer than {MIN_SAMPLES_PER_COLUMN} samples per column"
        )
    lo, hi = _column_bounds(f.size, f.step, length, delta)
    osc = column_oscillations(values, lo, hi)
    cells = np.ceil(osc / delta - 1e-9)
    return int(np.maximum(1, cells).sum())


def box_count_grid(cloud: GraphCloud, delta: float) -> int:
    """Occupied cells of the delta-grid anchored at the bounding-box minimum (any dimension)."""
    if delta <= 0:
        raise InvalidParameterError("delta must be positive")
    pts = cloud.points
    cells = np.floor((pts - pts.min(axis=0)) / delta).astype(np.int64)
    extent = cells.max(axis=0) + 1
    if float(np.prod(extent.astype(float))) < 2.0**62:
        key = np.ravel_multi_index(cells.T, extent)
        return int(np.unique(key).size)
    return int(np.unique(cells, axis=0).shape[0])


def _unique_cells(cells: np.ndarray) -> np.ndarray:
    extent = cells.max(axis=0) + 1
    if float(np.prod(extent.astype(float))) < 2.0**62:
        keys = np.unique(np.ravel_multi_index(cells.T, extent))
        return np.stack(np.unravel_index(keys, extent), axis=1)
    return np.unique(cells, axis=0)


def box_counts_nested(cloud: GraphCloud, deltas: Sequence[float]) -> Tuple[int, ...]:
    """Grid-occupancy counts on dyadic deltas (each exactly twice the next).

    Points are floored once at the finest delta. Since
    ``floor(x / (2 delta)) == floor(x / delta) >> 1`` exactly, every coarser
    level is the halved set of occupied cells of the level below, which
    gives the same counts as :func:`box_count_grid` at each delta.
    """
    deltas = [float(d) for d in deltas]
    if any(d <= 0 for d in deltas):
        raise InvalidParameterError("delta must be positive")
    if any(a != 2.0 * b for a, b in zip(deltas, deltas[1:])):
        raise InvalidParameterError("deltas must halve exactly from one level to the next")
    pts = cloud.points
    occupied = _unique_cells(np.floor((pts - pts.min(axis=0)) / deltas[-1]).astype(np.int64))
    counts = [occupied.shape[0]]
    for _ in deltas[:-1]:
        occupied = _unique_cells(occupied >> 1)
        counts.append(occupied.shape[0])
    return tuple(reversed(counts))


def box_count_3d(cloud: GraphCloud, delta: float) -> int:
    """Occupied cells of the delta-cube grid anchored at the bounding-box minimum."""
    if cloud.dim != 3:
        raise DimensionMismatchError("cube-grid counting needs a 3D cloud")
    return box_count_grid(cloud, delta)


@dataclass(frozen=True)
class BoxCountSeries:
    deltas: Tuple[float, ...]
    counts: Tuple[int, ...]
    method: str
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.method not in ("column-oscillation-2d", "cube-grid-2d", "cube-grid-3d"):
            raise InvalidParameterError(f"unknown box-count method {self.method!r}")
        if len(self.deltas) != len(self.counts):
            raise InvalidParameterError("deltas and counts differ in length")
        if any(d1 <= d2 for d1, d2 in zip(self.deltas, self.deltas[1:])) or min(self.deltas, default=1) <= 0:
            raise InvalidParameterError("deltas must be positive and decreasing")
        if any(c < 1 for c in self.counts):
            raise InvariantViolation("box counts must be at least 1")
        if any(c2 < c1 for c1, c2 in zip(self.counts, self.counts[1:])):
            raise InvariantViolation("box counts must not decrease as delta shrinks")

    def rows(self):
        """``(delta, count, log_delta, log_count)`` with natural logarithms."""
        return [(d, c, math.log(d), math.log(c)) for d, c in zip(self.deltas, self.counts)]


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    intercept: float
    r_squared: float
    series: BoxCountSeries
    fit_range: Tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "fit_range": list(self.fit_range),
            "method": self.series.method,
            "deltas": list(self.series.deltas),
            "counts": list(self.series.counts),
            "flags": list(self.series.flags),
        }


def dyadic_deltas(length: float, first: int, last: int) -> Tuple[float, ...]:
    return tuple(length * 2.0**-j for j in range(first, last + 1))


def max_scale_2d(f: SampledFunction) -> int:
    """Finest dyadic level with at least 10 samples per column."""
    length = f.domain[1] - f.domain[0]
    return int(math.floor(math.log2(length / (MIN_SAMPLES_PER_COLUMN * f.step)) + 1e-9))


def max_scale_3d(cloud: GraphCloud) -> int:
    """Finest dyadic level the cloud resolves.

    Two limits apply: at least 10 points per delta along the first axis, and
    the median spacing between consecutive points no larger than delta, so
    a sampled graph does not leave gaps wider than a cell.
    """
    pts = cloud.points
    length = float(np.ptp(pts[:, 0]))
    if len(pts) < 2 or length == 0:
        return DEFAULT_FIRST_SCALE
    along = math.floor(math.log2(len(pts) / MIN_SAMPLES_PER_COLUMN) + 1e-9)
    gaps = np.abs(np.diff(pts, axis=0)).max(axis=1)
    median_gap = float(np.median(gaps))
    if median_gap <= 0:
        return along
    spatial = math.floor(math.log2(length / median_gap) + 1e-9)
    return min(along, spatial)


def _map(fn, items):
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def box_count_series_2d(
    f: SampledFunction,
    component: str = "real",
    scales: Optional[Tuple[int, int]] = None,
) -> BoxCountSeries:
    """Counts at ``delta_j = |J| 2**-j`` for j in ``scales`` (default 4..finest allowed)."""
    length = f.domain[1] - f.domain[0]
    first, last = scales if scales is not None else (DEFAULT_FIRST_SCALE, max_scale_2d(f))
    if last < first:
        raise InsufficientResolutionError("grid too coarse for the requested scales")
    deltas = dyadic_deltas(length, first, last)
    counts = _map(lambda d: box_count_2d(f, d, component), deltas)
    return BoxCountSeries(deltas, counts, "column-oscillation-2d")


def box_count_series_grid(cloud: GraphCloud, scales: Optional[Tuple[int, int]] = None) -> BoxCountSeries:
    """Grid-occupancy counts; scales finer than :func:`max_scale_3d` are flagged ``undersampled``."""
    length = float(np.ptp(cloud.points[:, 0])) or 1.0
    finest = max_scale_3d(cloud)
    first, last = scales if scales is not None else (DEFAULT_FIRST_SCALE, finest)
    if last < first:
        raise InsufficientResolutionError("cloud too sparse for the requested scales")
    flags = ("undersampled",) if last > finest else ()
    deltas = dyadic_deltas(length, first, last)
    return BoxCountSeries(deltas, box_counts_nested(cloud, deltas), f"cube-grid-{cloud.dim}d", flags)


def box_count_series_3d(cloud: GraphCloud, scales: Optional[Tuple[int, int]] = None) -> BoxCountSeries:
    if cloud.dim != 3:
        raise DimensionMismatchError("cube-grid counting needs a 3D cloud")
    return box_count_series_grid(cloud, scales)


def estimate_dimension(series: BoxCountSeries, fit_range: Optional[Tuple[int, int]] = None) -> DimensionEstimate:
    """Least-squares slope of ``log N`` against ``-log delta``.

    ``fit_range`` is an inclusive index pair into the series; the default
    drops the coarsest and finest scale.
    """
    n = len(series.deltas)
    if n < 4:
        raise InsufficientResolutionError("need at least 4 scales")
    lo, hi = fit_range if fit_range is not None else (1, n - 2)
    if not 0 <= lo < hi < n:
        raise InvalidParameterError(f"bad fit range {(lo, hi)} for {n} scales")
    x = -np.log(np.asarray(series.deltas[lo : hi + 1]))
    y = np.log(np.asarray(series.counts[lo : hi + 1], dtype=float))
    if np.all(y == y[0]):
        raise DegenerateFitError("all counts in the fit range are equal")
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    syy = float(((y - ym) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / syy if syy > 0 else 1.0
    return DimensionEstimate(slope, intercept, min(1.0, max(0.0, r2)), series, (lo, hi))


def graph_dimension_2d(f: SampledFunction, component: str = "real", scales=None, fit_range=None) -> DimensionEstimate:
    return estimate_dimension(box_count_series_2d(f, component, scales), fit_range)


def graph_dimension_3d(cloud: GraphCloud, scales=None, fit_range=None) -> DimensionEstimate:
    return estimate_dimension(box_count_series_3d(cloud, scales), fit_range)


# Moran equation ---------------------------------------------------------------


@dataclass(frozen=True)
class MoranRoot:
    exponent: float
    residual: float


def moran_solve(ratios: Sequence[float]) -> MoranRoot:
    """Unique ``s >= 0`` with ``sum(ratios**s) == 1``, by bracketed bisection."""
    c = np.asarray(ratios, dtype=float)
    if c.ndim != 1 or c.size < 2:
        raise InvalidRatioError("need at least two ratios")
    if not np.all((c > 0) & (c < 1)):
        raise InvalidRatioError(f"every ratio must lie in (0, 1), got {list(ratios)}")

    def phi(s):
        return float(np.sum(c**s))

    lo, hi = 0.0, 1.0
    phi_lo, phi_hi = phi(lo), phi(hi)
    while phi_hi > 1.0:
        lo, phi_lo = hi, phi_hi
        hi *= 2.0
        phi_hi = phi(hi)
        if not phi_hi < phi_lo:
            raise InvariantViolation("Moran function is not decreasing")
    best = min((abs(phi_lo - 1), lo), (abs(phi_hi - 1), hi))
    for _ in range(MORAN_MAX_BISECTIONS):
        if best[0] < MORAN_RESIDUAL:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        phi_mid = phi(mid)
        if not phi_lo > phi_mid > phi_hi:
            raise InvariantViolation("Moran function is not strictly decreasing on the bracket")
        best = min(best, (abs(phi_mid - 1), mid))
        if phi_mid > 1.0:
            lo, phi_lo = mid, phi_mid
        else:
            hi, phi_hi = mid, phi_mid
    residual, s = best
    if residual >= MORAN_RESIDUAL:
        raise InvariantViolation(f"Moran residual {residual:.3e} above {MORAN_RESIDUAL}")
    return MoranRoot(float(s), float(residual))


@dataclass(frozen=True)
class ContractionBounds:
    """Lower and upper Lipschitz ratios ``0 < c_k <= C_k < 1`` of the maps ``W_k``."""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    heuristic: bool = False

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(lower) != len(upper):
            raise InvalidRatioError("lower and upper bounds differ in length")
        if not all(0 < c <= C < 1 for c, C in zip(lower, upper)):
            raise InvalidRatioError("bounds must satisfy 0 < c_k <= C_k < 1")


def dimension_bounds(bounds: ContractionBounds) -> Tuple[MoranRoot, MoranRoot]:
    r = moran_solve(bounds.lower)
    R = moran_solve(bounds.upper)
    if r.exponent > R.exponent:
        raise InvariantViolation("lower Moran root exceeds the upper one")
    return r, R


def d_metric_ratios(ifs, n_pairs: int = 10**5, seed: int = 0, y_box=None):
    """Sampled ``D(W_k p, W_k q) / D(p, q)`` with ``D = |dt| + |dz|``.

    Returns per-map (min, max) arrays. Points are drawn uniformly from
    ``J x y_box`` where ``y_box`` is ((re_lo, re_hi), (im_lo, im_hi)).
    """
    rng = np.random.default_rng(seed)
    x1, xN = ifs.partition.domain
    if y_box is None:
        y_box = ((-1.0, 1.0), (-1.0, 1.0))
    (r0, r1), (i0, i1) = y_box
    lows, highs = [], []
    for k in range(ifs.n_maps):
        t = rng.uniform(x1, xN, size=(2, n_pairs))
        z = rng.uniform(r0, r1, size=(2, n_pairs)) + 1j * rng.uniform(i0, i1, size=(2, n_pairs))
        before = np.abs(t[0] - t[1]) + np.abs(z[0] - z[1])
        ta, za = ifs.apply(k, t[0], z[0])
        tb, zb = ifs.apply(k, t[1], z[1])
        after = np.abs(ta - tb) + np.abs(za - zb)
        ratio = after[before > 0] / before[before > 0]
        lows.append(float(ratio.min()))
        highs.append(float(ratio.max()))
    return np.array(lows), np.array(highs)


def estimate_contraction_bounds(ifs, n_pairs: int = 10**5, seed: int = 0, y_box=None) -> Optional[ContractionBounds]:
    """Heuristic bounds from sampled D-ratios; ``None`` when some ratio reaches 1."""
    lo, hi = d_metric_ratios(ifs, n_pairs, seed, y_box)
    if np.any(hi >= 1) or np.any(lo <= 0):
        return None
    return ContractionBounds(tuple(lo), tuple(hi), heuristic=True)


def holder_upper_bound(sigma: float) -> float:
    """Box-dimension ceiling ``2 - sigma`` for graphs of sigma-Hölder functions."""
    if not 0.0 < sigma <= 1.0:
        raise InvalidParameterError(f"exponent must lie in (0, 1], got {sigma}")
    return 2.0 - sigma


# Hölder exponent ---------------------------------------------------------------


def _oscillation_values(f: SampledFunction, component: str) -> Tuple[np.ndarray, ...]:
    if component == "complex":
        return f.values.real, f.values.imag
    return (_component(f, component),)


def max_window_oscillation(f: SampledFunction, window: int, component: str = "real") -> float:
    """Largest oscillation over aligned windows of ``window`` grid steps."""
    lo = np.arange(0, f.size - 1, window)
    hi = np.minimum(lo + window, f.size - 1)
    return max(float(column_oscillations(v, lo, hi).max()) for v in _oscillation_values(f, component))


def holder_exponent_estimate(f: SampledFunction, component: str = "real") -> SeminormEstimate:
    """Slope of log max-oscillation against log window width, clipped to (0, 1].

    Windows span 2**j grid steps for j = 1 .. log2(M - 1) / 2; coarser windows
    mix in the smooth low-frequency part and bias the slope. ``component``
    may be ``'complex'``, which takes the larger of the two part oscillations.
    """
    if f.size < 2**10:
        raise InsufficientResolutionError("need at least 2**10 samples")
    top = int(math.floor(math.log2(f.size - 1))) // 2
    js = np.arange(1, top + 1)
    osc = np.array([max_window_oscillation(f, 2**int(j), component) for j in js])
    if np.all(osc == 0):
        return SeminormEstimate(1.0, 1.0, "holder-seminorm")
    if np.any(osc == 0):
        raise InsufficientResolutionError("oscillation vanishes at some scales")
    x = np.log(2.0**js * f.step)
    slope = float(np.polyfit(x, np.log(osc), 1)[0])
    # slopes within rounding of 1 are Lipschitz data
    sigma = 1.0 if slope >= 1.0 - CLIP_TOLERANCE else max(slope, np.finfo(float).tiny)
    return SeminormEstimate(sigma, sigma, "holder-seminorm")


# Hausdorff distance --------------------------------------------------------------


def directed_hausdorff(a: GraphCloud, b: GraphCloud) -> float:
    """``max_{p in a} min_{q in b} |p - q|``."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"ambient dimensions differ: {a.dim} vs {b.dim}")
    dist, _ = cKDTree(b.points).query(a.points, k=1)
    return float(dist.max())


def hausdorff_distance(a: GraphCloud, b: GraphCloud) -> float:
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))
