"""IFS construction, alpha-fractal fixed-point iteration and the chaos game."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .core import Partition, SampledFunction, sup_distance, sup_norm
from .errors import (
    BaseEqualsGermError,
    EndpointMismatchError,
    GridMismatchError,
    InvalidParameterError,
    InvariantViolation,
    JoinConditionError,
    NoConvergenceError,
    ScalingTooLargeError,
)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITERATIONS = 200
CONTRACTION_SLACK = 0.05
BASE_GERM_SEPARATION = 1e-12


@dataclass(frozen=True)
class AffineMapX:
    """``P_k(t) = a t + d``."""

    a: float
    d: float

    def __call__(self, t):
        return self.a * t + self.d

    def inverse(self, t):
        return (t - self.d) / self.a


@dataclass(frozen=True, eq=False)
class ScalingFunction:
    """Scaling function ``alpha_k`` on J: constant, affine in t, or sampled."""

    form: str
    data: object

    def __post_init__(self):
        if self.form == "constant":
            object.__setattr__(self, "data", complex(self.data))
        elif self.form == "affine-in-t":
            slope, intercept = self.data
            object.__setattr__(self, "data", (complex(slope), complex(intercept)))
        elif self.form == "sampled":
            if not isinstance(self.data, SampledFunction):
                raise InvalidParameterError("sampled scaling needs a SampledFunction")
        else:
            raise InvalidParameterError(f"unknown scaling form {self.form!r}")

    @classmethod
    def constant(cls, value) -> "ScalingFunction":
        return cls("constant", value)

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.form == "constant":
            return np.full(t.shape, self.data, dtype=np.complex128)
        if self.form == "affine-in-t":
            slope, intercept = self.data
            return slope * t + intercept
        return self.data.evaluate(t)

    def on_grid(self, like: SampledFunction) -> SampledFunction:
        if self.form == "sampled":
            self.data.check_grid(like)
            return self.data
        return SampledFunction(like.domain, self.evaluate(like.grid))

    def sup_norm(self, like: SampledFunction) -> float:
        if self.form == "constant":
            return abs(self.data)
        return sup_norm(self.on_grid(like))

    def __eq__(self, other):
        if not isinstance(other, ScalingFunction) or self.form != other.form:
            return NotImplemented if not isinstance(other, ScalingFunction) else False
        return self.data == other.data

    __hash__ = None


def knot_indices(partition: Partition, like: SampledFunction) -> np.ndarray:
    """Grid index of every knot; raises unless each knot is a grid point."""
    a, b = like.domain
    if (a, b) != partition.domain:
        raise GridMismatchError(f"grid domain {like.domain} differs from partition {partition.domain}")
    pos = (np.asarray(partition.knots) - a) / like.step
    idx = np.rint(pos).astype(np.int64)
    if np.any(np.abs(pos - idx) > 1e-9 * max(1.0, like.size)):
        raise GridMismatchError("working grid must contain every knot")
    return idx


@dataclass(frozen=True, eq=False)
class FractalProblem:
    """Germ ``f``, base ``b`` and scaling vector on a partition of J."""

    partition: Partition
    germ: SampledFunction
    base: SampledFunction
    scalings: Tuple[ScalingFunction, ...]
    values: Optional[Tuple[complex, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "scalings", tuple(self.scalings))
        self.germ.check_grid(self.base)
        idx = knot_indices(self.partition, self.germ)
        if len(self.scalings) != self.partition.n_maps:
            raise InvalidParameterError(
                f"need {self.partition.n_maps} scaling functions, got {len(self.scalings)}"
            )
        f, b = self.germ.values, self.base.values
        for end in (0, -1):
            if abs(f[end] - b[end]) > 1e-10:
                raise EndpointMismatchError("base must agree with the germ at both endpoints of J")
        if sup_distance(self.germ, self.base) <= BASE_GERM_SEPARATION:
            raise BaseEqualsGermError("base function must differ from the germ")
        for k, s in enumerate(self.scalings):
            if s.sup_norm(self.germ) >= 1.0:
                raise ScalingTooLargeError(f"scaling {k + 1} has sup norm >= 1")
        if self.values is None:
            object.__setattr__(self, "values", tuple(complex(v) for v in f[idx]))
        elif len(self.values) != self.partition.n_knots:
            raise InvalidParameterError("need one interpolation value per knot")
        else:
            object.__setattr__(self, "values", tuple(complex(v) for v in self.values))

    @property
    def alpha_sup(self) -> float:
        return max(s.sup_norm(self.germ) for s in self.scalings)


@dataclass(frozen=True, eq=False)
class IFSSystem:
    """Maps ``W_k(t, y) = (P_k(t), alpha_k(t) y + q_k(t))`` on ``J x C``."""

    partition: Partition
    x_maps: Tuple[AffineMapX, ...]
    scalings: Tuple[ScalingFunction, ...]
    offsets: Tuple[SampledFunction, ...]
    values: Tuple[complex, ...]

    @property
    def n_maps(self) -> int:
        return len(self.x_maps)

    def psi(self, k: int, t, y):
        return self.scalings[k].evaluate(t) * y + self.offsets[k].evaluate(t)

    def apply(self, k: int, t, y):
        return self.x_maps[k](t), self.psi(k, t, y)


def affine_maps(partition: Partition) -> Tuple[AffineMapX, ...]:
    x1, xN = partition.domain
    maps = []
    for k in range(partition.n_maps):
        lo, hi = partition.subinterval(k)
        a = (hi - lo) / (xN - x1)
        maps.append(AffineMapX(a, lo - a * x1))
    return tuple(maps)


def _check_x_maps(partition: Partition, maps):
    x1, xN = partition.domain
    for k, m in enumerate(maps):
        lo, hi = partition.subinterval(k)
        scale = max(1.0, abs(lo), abs(hi))
        if not 0.0 < m.a < 1.0:
            raise InvariantViolation(f"P_{k + 1} is not a contraction")
        if abs(m(x1) - lo) > 1e-12 * scale or abs(m(xN) - hi) > 1e-12 * scale:
            raise InvariantViolation(f"P_{k + 1} misses its endpoint conditions")
    # open images (d_k, a_k x_N + d_k) must be pairwise disjoint
    images = sorted((m(x1), m(xN)) for m in maps)
    for (_, right), (left, _) in zip(images, images[1:]):
        if right > left:
            raise InvariantViolation("open-set condition violated")


def _check_joins(ifs: IFSSystem, tol: float = 1e-10):
    x1, xN = ifs.partition.domain
    y = ifs.values
    for k in range(ifs.n_maps):
        start = complex(ifs.psi(k, np.array([x1]), y[0])[0])
        end = complex(ifs.psi(k, np.array([xN]), y[-1])[0])
        if abs(start - y[k]) > tol or abs(end - y[k + 1]) > tol:
            raise JoinConditionError(f"join conditions fail for map {k + 1}")


def _pullback_offsets(problem: FractalProblem) -> Tuple[SampledFunction, ...]:
    """``q_k(t) = f(P_k(t)) - alpha_k(t) b(t)`` sampled on the working grid."""
    f, b = problem.germ, problem.base
    t = f.grid
    out = []
    for m, s in zip(affine_maps(problem.partition), problem.scalings):
        alpha = s.on_grid(f).values
        out.append(SampledFunction(f.domain, f.evaluate(m(t)) - alpha * b.values))
    return tuple(out)


def build_ifs(problem: FractalProblem) -> IFSSystem:
    """IFS whose attractor is the graph of the alpha-fractal of ``problem``."""
    maps = affine_maps(problem.partition)
    _check_x_maps(problem.partition, maps)
    ifs = IFSSystem(problem.partition, maps, problem.scalings, _pullback_offsets(problem), problem.values)
    _check_joins(ifs)
    return ifs


@dataclass(frozen=True)
class FixedPointReport:
    iterations: int
    final_change: float
    contraction_ratio_observed: float
    converged: bool
    changes: Tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_change": self.final_change,
            "contraction_ratio_observed": self.contraction_ratio_observed,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class _Pullback:
    """Precomputed gather indices for ``t -> P_k^{-1}(t)`` on the grid."""

    index: np.ndarray
    weight: Optional[np.ndarray]
    interval: np.ndarray
    points: np.ndarray

    def gather(self, values: np.ndarray) -> np.ndarray:
        if self.weight is None:
            return values[self.index]
        w = self.weight
        return values[self.index] * (1.0 - w) + values[self.index + 1] * w


def _pullback(partition: Partition, like: SampledFunction) -> _Pullback:
    idx = knot_indices(partition, like)
    M = like.size
    interval = np.searchsorted(idx, np.arange(M), side="right") - 1
    interval = np.clip(interval, 0, partition.n_maps - 1)
    maps = affine_maps(partition)
    x1 = partition.domain[0]
    j = np.arange(M)
    rel = j - idx[interval]
    widths = np.diff(idx)[interval]
    # exact integer route when each subinterval's grid maps onto the full grid
    if np.all((M - 1) % np.diff(idx) == 0):
        index = rel * ((M - 1) // widths)
        points = x1 + index * like.step
        return _Pullback(index.astype(np.int64), None, interval, points)
    t = like.grid
    a = np.array([m.a for m in maps])[interval]
    d = np.array([m.d for m in maps])[interval]
    points = np.clip((t - d) / a, *partition.domain)
    pos = np.clip((points - x1) / like.step, 0.0, M - 1)
    i0 = np.minimum(np.floor(pos).astype(np.int64), M - 2)
    w = pos - i0
    return _Pullback(i0, w, interval, points)


def _iterate(update, h0: np.ndarray, alpha_sup: float, tolerance: float, max_iterations: int):
    if tolerance <= 0:
        raise InvalidParameterError("tolerance must be positive")
    h = h0
    changes = []
    for _ in range(max_iterations):
        h_next = update(h)
        change = float(np.abs(h_next - h).max())
        changes.append(change)
        h = h_next
        if change < tolerance:
            break
    scale = max(1.0, float(np.abs(h).max()))
    floor = 1e3 * np.finfo(float).eps * scale
    ratios = [c1 / c0 for c0, c1 in zip(changes, changes[1:]) if c0 > floor and c1 > floor]
    observed = max(ratios) if ratios else 0.0
    converged = changes[-1] < tolerance
    report = FixedPointReport(len(changes), changes[-1], float(observed), converged, tuple(changes))
    if not converged:
        raise NoConvergenceError(
            f"no convergence after {max_iterations} iterations (last change {changes[-1]:.3e})", report
        )
    if observed > alpha_sup + CONTRACTION_SLACK:
        raise InvariantViolation(
            f"observed contraction {observed:.4f} exceeds ||alpha|| + {CONTRACTION_SLACK}"
        )
    return h, report


def alpha_fractal(
    problem: FractalProblem,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> Tuple[SampledFunction, FixedPointReport]:
    """Fixed point of ``(S h)(t) = f(t) + alpha_k(u) (h - b)(u)``, ``u = P_k^{-1}(t)``.

    Starts from ``h_0 = f``. On grids where every ``P_k`` maps grid points
    onto grid points the pullback is an exact gather; otherwise ``h`` and ``b``
    are linearly interpolated at the pullback points.
    """
    f, b = problem.germ, problem.base
    pb = _pullback(problem.partition, f)
    alpha = np.empty(f.size, dtype=np.complex128)
    for k, s in enumerate(problem.scalings):
        mask = pb.interval == k
        alpha[mask] = s.evaluate(pb.points[mask])
    b_u = pb.gather(b.values)
    fv = f.values

    def update(h):
        return fv + alpha * (pb.gather(h) - b_u)

    h, report = _iterate(update, fv.copy(), problem.alpha_sup, tolerance, max_iterations)
    return SampledFunction(f.domain, h), report


def general_fif(
    partition: Partition,
    values: Sequence[complex],
    scalings: Sequence[ScalingFunction],
    offsets: Sequence[SampledFunction],
    tolerance: float = DEFAULT_TOLERANCE,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> Tuple[SampledFunction, FixedPointReport]:
    """FIF ``h(t) = alpha_k(u) h(u) + q_k(u)`` with ``u = P_k^{-1}(t)`` on ``J_k``.

    ``offsets`` are the ``q_k`` sampled on a common grid of J. The join
    conditions ``Psi_k(x_1, y_1) = y_k`` and ``Psi_k(x_N, y_N) = y_{k+1}`` are
    checked before iterating.
    """
    values = tuple(complex(v) for v in values)
    scalings = tuple(scalings)
    offsets = tuple(offsets)
    if len(values) != partition.n_knots:
        raise InvalidParameterError("need one interpolation value per knot")
    if len(scalings) != partition.n_maps or len(offsets) != partition.n_maps:
        raise InvalidParameterError(f"need {partition.n_maps} scalings and offsets")
    like = offsets[0]
    for q in offsets[1:]:
        like.check_grid(q)
    alpha_sup = max(s.sup_norm(like) for s in scalings)
    if alpha_sup >= 1.0:
        raise ScalingTooLargeError("scaling functions must have sup norm < 1")
    maps = affine_maps(partition)
    _check_x_maps(partition, maps)
    ifs = IFSSystem(partition, maps, scalings, offsets, values)
    _check_joins(ifs)

    pb = _pullback(partition, like)
    alpha = np.empty(like.size, dtype=np.complex128)
    q_u = np.empty(like.size, dtype=np.complex128)
    for k, (s, q) in enumerate(zip(scalings, offsets)):
        mask = pb.interval == k
        alpha[mask] = s.evaluate(pb.points[mask])
        q_u[mask] = q.evaluate(pb.points[mask])
    h0 = np.interp(like.grid, partition.knots, np.real(values)) + 1j * np.interp(
        like.grid, partition.knots, np.imag(values)
    )

    def update(h):
        return alpha * pb.gather(h) + q_u

    h, report = _iterate(update, h0, alpha_sup, tolerance, max_iterations)
    return SampledFunction(like.domain, h), report


@dataclass(frozen=True, eq=False)
class GraphCloud:
    """Finite point set in R^2 or R^3; rows are points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] not in (2, 3) or pts.shape[0] < 1:
            raise InvalidParameterError("a graph cloud is a nonempty (n, 2) or (n, 3) array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


GRAPH_MODES = ("real-2d", "imag-2d", "complex-3d", "pair-3d")


def graph_cloud(f: SampledFunction, mode: str = "complex-3d", second: Optional[SampledFunction] = None) -> GraphCloud:
    """Materialize a function graph as a point cloud on the sample grid."""
    t = f.grid
    v = f.values
    if mode == "real-2d":
        pts = np.column_stack([t, v.real])
    elif mode == "imag-2d":
        pts = np.column_stack([t, v.imag])
    elif mode == "complex-3d":
        pts = np.column_stack([t, v.real, v.imag])
    elif mode == "pair-3d":
        if second is None:
            raise InvalidParameterError("pair-3d needs a second function")
        f.check_grid(second)
        pts = np.column_stack([t, v.real, second.values.real])
    else:
        raise InvalidParameterError(f"unknown graph mode {mode!r}")
    return GraphCloud(pts)


def chaos_game(
    ifs: IFSSystem,
    n_points: int,
    seed: int = 0,
    burn_in: int = 20,
    chains: int = 1024,
) -> GraphCloud:
    """Random-iteration rendering of the attractor.

    ``chains`` independent orbits start at ``(x_1, y_1)`` and advance in
    lockstep; maps are chosen uniformly. Each chain discards its first
    ``burn_in`` points.
    """
    if n_points < 1:
        raise InvalidParameterError("n_points must be positive")
    rng = np.random.default_rng(seed)
    chains = max(1, min(chains, n_points))
    steps = burn_in + math.ceil(n_points / chains)
    t = np.full(chains, ifs.partition.domain[0])
    y = np.full(chains, ifs.values[0], dtype=np.complex128)
    a = np.array([m.a for m in ifs.x_maps])
    d = np.array([m.d for m in ifs.x_maps])
    out = []
    for step in range(steps):
        k = rng.integers(0, ifs.n_maps, size=chains)
        y_new = np.empty_like(y)
        for i in range(ifs.n_maps):
            sel = k == i
            if np.any(sel):
                y_new[sel] = ifs.psi(i, t[sel], y[sel])
        t = a[k] * t + d[k]
        y = y_new
        if step >= burn_in:
            out.append(np.column_stack([t, y.real, y.imag]))
    pts = np.concatenate(out)[:n_points]
    return GraphCloud(pts)
