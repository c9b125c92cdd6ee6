"""Hypothesis checkers and graph-dimension experiments for the dimension theorems.

Hausdorff dimension cannot be computed from samples. Claims about it are
tested one-sidedly through box-counting estimates, and a passing check
reports ``consistent``, never ``verified``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import (
    SampledFunction,
    holder_norm,
    holder_seminorm,
    lipschitz_estimate,
    sup_norm,
    total_variation,
)
from .dimension import (
    DEFAULT_FIRST_SCALE,
    ContractionBounds,
    box_count_3d,
    box_count_series_2d,
    box_count_series_3d,
    box_count_series_grid,
    dimension_bounds,
    dyadic_deltas,
    estimate_dimension,
    holder_exponent_estimate,
    max_scale_2d,
    max_scale_3d,
)
from .errors import InvalidParameterError
from .fif import FractalProblem, affine_maps, graph_cloud
from .generators import sample

THEOREM_IDS = (
    "bounds-3.6",
    "holder-3.11",
    "mainthm-3.12",
    "bv",
    "lemma-3.1",
    "prop-3.2",
    "prop-3.3",
    "lemma-3.4",
    "lemma-3.5",
    "peano-remark",
)

DIMENSION_TOL = 0.1
PROPERTY_TOL = 0.05
LIPSCHITZ_COLLAPSE_TOL = 0.07
LIPSCHITZ_CAP = 10.0
MIN_WINDOW_STEPS = 4


@dataclass(frozen=True)
class TheoremConstants:
    l_f: float
    l_b: float
    l_alpha: float
    l_f1: float
    l_f2: float
    delta_0: float
    k_fba: float
    M_bound: float
    c: float
    sigma: float
    alpha_h_norm: float
    alpha_sup: float
    alpha_bv: float
    b_sup: float
    certified_delta_0: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name == "certified_delta_0":
                continue
            if not value >= 0:
                raise InvalidParameterError(f"{name} must be nonnegative")
        if not 0 < self.c < 1:
            raise InvalidParameterError("c must lie in (0, 1)")
        if not 0 < self.sigma <= 1:
            raise InvalidParameterError("sigma must lie in (0, 1]")


@dataclass
class TheoremReport:
    theorem_id: str
    hypothesis_values: Dict[str, float]
    hypothesis_satisfied: bool
    predicted: Dict[str, object]
    observed: Dict[str, object]
    verdict: str = "consistent"
    notes: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise InvalidParameterError(f"unknown theorem id {self.theorem_id!r}")
        if not self.hypothesis_satisfied:
            self.verdict = "hypothesis-not-met"
        if self.verdict not in ("consistent", "inconsistent", "hypothesis-not-met"):
            raise InvalidParameterError(f"unknown verdict {self.verdict!r}")

    def to_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "hypothesis_values": self.hypothesis_values,
            "hypothesis_satisfied": self.hypothesis_satisfied,
            "predicted": self.predicted,
            "observed": self.observed,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def summary(self) -> str:
        lines = [f"{self.theorem_id}: {self.verdict}"]
        if not self.hypothesis_satisfied:
            lines.extend(
                f"  hypothesis {key} = {value:.6g}"
                for key, value in self.hypothesis_values.items()
                if isinstance(value, float)
            )
        for key, value in self.observed.items():
            if isinstance(value, float):
                lines.append(f"  {key} = {value:.4f}")
            elif isinstance(value, (bool, int, str)):
                lines.append(f"  {key} = {value}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


# constant estimation ---------------------------------------------------------------


def lower_oscillation_profile(values: np.ndarray, step: float, sigma: float, max_offset: int) -> np.ndarray:
    """``lam[d] = min_{t1} max_{0 < |t1 - t2| <= d h} |f(t1) - f(t2)| / |t1 - t2|**sigma``.

    Entry ``d`` (1-based) covers every offset up to ``d`` grid steps on both sides.
    """
    M = values.size
    max_offset = min(max_offset, M - 1)
    best = np.zeros(M)
    profile = np.zeros(max_offset + 1)
    for d in range(1, max_offset + 1):
        ratio = np.abs(values[d:] - values[:-d]) / (d * step) ** sigma
        np.maximum(best[:-d], ratio, out=best[:-d])
        np.maximum(best[d:], ratio, out=best[d:])
        profile[d] = best.min()
    return profile


def lower_oscillation_constant(
    f: SampledFunction,
    sigma: float,
    delta_0: float,
    component: str = "real",
    min_steps: int = MIN_WINDOW_STEPS,
) -> Tuple[float, float]:
    """Discrete ``l_{f_i}`` with the largest certified ``delta_0``.

    For every dyadic ``delta`` between ``min_steps`` grid steps and
    ``delta_0`` the scan takes ``min_{t1} max_{|t1-t2| <= delta}`` of the
    Hölder ratio; the constant is the minimum over those scales. The second
    value is the largest dyadic ``delta_0`` whose constant stays positive;
    the scan stops at ``4 delta_0`` (and at ``|J| / 2``).
    """
    values = f.values.real if component == "real" else f.values.imag
    length = f.domain[1] - f.domain[0]
    top = int(round(min(length / 2, 4 * delta_0) / f.step))
    profile = lower_oscillation_profile(values, f.step, sigma, top)
    offsets = []
    d = 1
    while d <= top:
        if d >= min_steps:
            offsets.append(d)
        d *= 2
    if not offsets:
        raise InvalidParameterError("grid too coarse for the lower-oscillation scan")
    lam = np.array([profile[d] for d in offsets])
    delta = np.array(offsets) * f.step
    running = np.minimum.accumulate(lam)
    within = delta <= delta_0 * (1 + 1e-12)
    l_value = float(running[within][-1]) if np.any(within) else float(lam[0])
    positive = delta[running > 0]
    certified = float(positive.max()) if positive.size else 0.0
    return l_value, certified


def estimate_constants(
    problem: FractalProblem,
    f_alpha: SampledFunction,
    sigma: float,
    delta_0: float = 2.0**-6,
) -> TheoremConstants:
    """Evaluate the hypothesis constants of the Hölder and main dimension theorems."""
    f, b = problem.germ, problem.base
    alphas = [s.on_grid(f) for s in problem.scalings]
    l_f1, cert1 = lower_oscillation_constant(f, sigma, delta_0, "real")
    l_f2, cert2 = lower_oscillation_constant(f, sigma, delta_0, "imag")
    return TheoremConstants(
        l_f=holder_seminorm(f, sigma).value,
        l_b=holder_seminorm(b, sigma).value,
        l_alpha=max(holder_seminorm(a, sigma).value for a in alphas),
        l_f1=l_f1,
        l_f2=l_f2,
        delta_0=delta_0,
        k_fba=holder_seminorm(f_alpha, sigma).value,
        M_bound=sup_norm(f_alpha),
        c=min(m.a for m in affine_maps(problem.partition)),
        sigma=sigma,
        alpha_h_norm=max(holder_norm(a, sigma).value for a in alphas),
        alpha_sup=max(sup_norm(a) for a in alphas),
        alpha_bv=max(total_variation(a).bv_norm for a in alphas),
        b_sup=sup_norm(b),
        certified_delta_0=(cert1, cert2),
    )


# theorem checks -----------------------------------------------------------------------


def _component_dims(f: SampledFunction, scales=None) -> Dict[str, float]:
    return {
        "dim_re": estimate_dimension(box_count_series_2d(f, "real", scales)).slope,
        "dim_im": estimate_dimension(box_count_series_2d(f, "imag", scales)).slope,
    }


def check_holder_theorem(
    constants: TheoremConstants,
    f_alpha: Optional[SampledFunction] = None,
    tol: float = DIMENSION_TOL,
) -> TheoremReport:
    """Hypothesis ``||alpha||_H < c**sigma``; observes the exponent and dimensions of f^alpha."""
    threshold = constants.c**constants.sigma
    satisfied = constants.alpha_h_norm < threshold
    sigma = constants.sigma
    report = TheoremReport(
        "holder-3.11",
        {"alpha_h_norm": constants.alpha_h_norm, "c": constants.c, "sigma": sigma, "threshold": threshold},
        satisfied,
        {"holder_exponent_min": sigma, "box_dim_max": 2.0 - sigma},
        {},
    )
    if satisfied and f_alpha is not None:
        sigma_hat = holder_exponent_estimate(f_alpha, "complex").value
        report.observed["sigma_hat"] = sigma_hat
        report.observed.update(_component_dims(f_alpha))
        ok = sigma_hat >= sigma - tol
        ok &= report.observed["dim_re"] <= 2.0 - sigma + tol
        ok &= report.observed["dim_im"] <= 2.0 - sigma + tol
        report.verdict = "consistent" if ok else "inconsistent"
    return report


def mainthm_threshold(constants: TheoremConstants) -> Tuple[float, Tuple[float, float]]:
    """Right-hand side of the main theorem's hypothesis and its two numerators.

    A nonpositive numerator makes the threshold 0 so the hypothesis fails.
    """
    cs = constants.c**constants.sigma
    penalty = 2.0 * (constants.b_sup + constants.M_bound) * constants.l_alpha / cs
    denom = 2.0 * (constants.k_fba + constants.l_b)
    nums = (constants.l_f1 - penalty, constants.l_f2 - penalty)
    if min(nums) <= 0:
        return 0.0, nums
    if denom == 0:
        return cs, nums
    return cs * min(1.0, nums[0] / denom, nums[1] / denom), nums


def check_mainthm(
    constants: TheoremConstants,
    f_alpha: Optional[SampledFunction] = None,
    tol: float = DIMENSION_TOL,
    scales=None,
) -> TheoremReport:
    threshold, nums = mainthm_threshold(constants)
    satisfied = min(nums) > 0 and constants.alpha_h_norm < threshold
    target = 2.0 - constants.sigma
    report = TheoremReport(
        "mainthm-3.12",
        {
            "alpha_h_norm": constants.alpha_h_norm,
            "threshold": threshold,
            "numerator_re": nums[0],
            "numerator_im": nums[1],
            "l_f1": constants.l_f1,
            "l_f2": constants.l_f2,
            "k_fba": constants.k_fba,
            "l_b": constants.l_b,
            "l_alpha": constants.l_alpha,
            "b_sup": constants.b_sup,
            "M_bound": constants.M_bound,
            "c": constants.c,
            "sigma": constants.sigma,
        },
        satisfied,
        {"dim_re": [target - tol, target + tol], "dim_im": [target - tol, target + tol]},
        {},
    )
    if satisfied and f_alpha is not None:
        report.observed.update(_component_dims(f_alpha, scales))
        ok = all(abs(report.observed[k] - target) <= tol for k in ("dim_re", "dim_im"))
        report.verdict = "consistent" if ok else "inconsistent"
    return report


def check_bv_theorem(
    problem: FractalProblem,
    f_alpha: Optional[SampledFunction] = None,
    tol: float = DIMENSION_TOL,
) -> TheoremReport:
    """Hypothesis ``||alpha||_BV < 1 / (2 (N - 1))``; predicts graph dimension 1."""
    like = problem.germ
    alpha_bv = max(total_variation(s.on_grid(like)).bv_norm for s in problem.scalings)
    n_maps = problem.partition.n_maps
    threshold = 1.0 / (2.0 * n_maps)
    tv_f = total_variation(problem.germ).total_variation
    tv_b = total_variation(problem.base).total_variation
    satisfied = alpha_bv < threshold and math.isfinite(tv_f) and math.isfinite(tv_b)
    report = TheoremReport(
        "bv",
        {"alpha_bv": alpha_bv, "threshold": threshold, "tv_germ": tv_f, "tv_base": tv_b},
        satisfied,
        {"dimension": 1.0},
        {},
    )
    if satisfied and f_alpha is not None:
        report.observed.update(_component_dims(f_alpha))
        report.observed["dim_3d"] = estimate_dimension(box_count_series_3d(graph_cloud(f_alpha))).slope
        report.observed["total_variation"] = total_variation(f_alpha).total_variation
        ok = all(abs(report.observed[k] - 1.0) <= tol for k in ("dim_re", "dim_im", "dim_3d"))
        report.verdict = "consistent" if ok else "inconsistent"
    return report


def check_bounds_theorem(
    bounds: ContractionBounds,
    f_alpha: Optional[SampledFunction] = None,
    tol: float = DIMENSION_TOL,
) -> TheoremReport:
    """Moran-root interval ``[r, R]`` against the 3D box estimate of the graph.

    Only ``dim_H <= dim_B`` links the two, so the check is one-sided: the box
    estimate must not exceed ``R + tol``; for exact similarities (``r == R``)
    it must also lie within ``tol`` of ``r``.
    """
    r, R = dimension_bounds(bounds)
    report = TheoremReport(
        "bounds-3.6",
        {"lower": list(bounds.lower), "upper": list(bounds.upper)},
        True,
        {"r": r.exponent, "R": R.exponent},
        {},
    )
    if bounds.heuristic:
        report.notes.append("contraction bounds estimated from sampled D-ratios (heuristic)")
    if f_alpha is not None:
        est = estimate_dimension(box_count_series_3d(graph_cloud(f_alpha))).slope
        report.observed["dim_3d"] = est
        if math.isclose(r.exponent, R.exponent, rel_tol=0, abs_tol=1e-12):
            ok = abs(est - r.exponent) <= tol
        else:
            ok = est <= R.exponent + tol
        if R.exponent <= 1.0 + tol and est >= 1.0 - tol:
            report.notes.append("graph of a continuous function has dimension >= 1: boundary-consistent")
            ok = True
        report.verdict = "consistent" if ok else "inconsistent"
    return report


def shared_scales(f: SampledFunction, cloud, first: int = DEFAULT_FIRST_SCALE) -> Tuple[Tuple[int, int], bool]:
    """Common dyadic range for 2D and 3D estimates; flags ranges forced past 3D resolution."""
    last = min(max_scale_2d(f), max_scale_3d(cloud))
    forced = last < first + 3
    return (first, max(last, first + 3)), forced


def lemma_3_5_counts(g: SampledFunction, h: SampledFunction, levels: Sequence[int] = range(4, 10)) -> TheoremReport:
    """Integer 3D counts of ``G(g + ih)`` and ``G((g, h))`` at dyadic deltas."""
    g.check_grid(h)
    z = SampledFunction(g.domain, g.values.real + 1j * h.values.real)
    cloud_c = graph_cloud(z, "complex-3d")
    cloud_p = graph_cloud(g.real, "pair-3d", h.real)
    length = g.domain[1] - g.domain[0]
    counts_c, counts_p = [], []
    for j in levels:
        delta = length * 2.0**-j
        counts_c.append(box_count_3d(cloud_c, delta))
        counts_p.append(box_count_3d(cloud_p, delta))
    equal = counts_c == counts_p
    return TheoremReport(
        "lemma-3.5",
        {"levels": list(levels)},
        True,
        {"counts_equal": True},
        {"counts_complex": counts_c, "counts_pair": counts_p, "counts_equal": equal},
        "consistent" if equal else "inconsistent",
    )


def compare_graph_dimensions(
    g: SampledFunction,
    h: SampledFunction,
    tol: float = PROPERTY_TOL,
    collapse_tol: float = LIPSCHITZ_COLLAPSE_TOL,
    theorem_id: str = "lemma-3.1",
) -> TheoremReport:
    """Box estimates of G(g), G(h), G(g+h), G(g+ih) and G((g, h)) on one scale range."""
    g.check_grid(h)
    g, h = g.real, h.real
    z = SampledFunction(g.domain, g.values.real + 1j * h.values.real)
    cloud_c = graph_cloud(z, "complex-3d")
    cloud_p = graph_cloud(g, "pair-3d", h)
    scales, forced = shared_scales(g, cloud_c)
    series_c = box_count_series_3d(cloud_c, scales)
    series_p = box_count_series_3d(cloud_p, scales)
    # 2D graphs use the same grid-occupancy counter so all five share one estimator
    est = {
        "dim_g": estimate_dimension(box_count_series_grid(graph_cloud(g, "real-2d"), scales)).slope,
        "dim_h": estimate_dimension(box_count_series_grid(graph_cloud(h, "real-2d"), scales)).slope,
        "dim_g_plus_h": estimate_dimension(box_count_series_grid(graph_cloud(g + h, "real-2d"), scales)).slope,
        "dim_g_plus_ih": estimate_dimension(series_c).slope,
        "dim_pair": estimate_dimension(series_p).slope,
    }
    lip_h = lipschitz_estimate(h).value
    counts_equal = series_c.counts == series_p.counts
    max_ok = est["dim_g_plus_ih"] >= max(est["dim_g"], est["dim_h"]) - tol
    observed = dict(est)
    observed.update(
        {
            "counts_equal": counts_equal,
            "max_inequality": max_ok,
            "lipschitz_h": lip_h,
            "scales": list(scales),
        }
    )
    ok = counts_equal and max_ok
    predicted = {"dim_g_plus_ih_min": max(est["dim_g"], est["dim_h"]) - tol, "counts_equal": True}
    if lip_h <= LIPSCHITZ_CAP:
        spread = max(est.values()) - min(est.values())
        observed["lipschitz_collapse"] = abs(est["dim_g_plus_ih"] - est["dim_g"]) <= collapse_tol
        observed["spread"] = spread
        predicted["all_equal_within"] = collapse_tol
        ok &= observed["lipschitz_collapse"]
    report = TheoremReport(theorem_id, {"lipschitz_h": lip_h, "cap": LIPSCHITZ_CAP}, True, predicted, observed)
    report.verdict = "consistent" if ok else "inconsistent"
    if forced:
        report.notes.append("3D scales forced past the sampled resolution")
    return report


def peano_remark_experiment(depth: int = 8) -> TheoremReport:
    """Box estimates for the Hilbert-curve coordinates and their joint graph."""
    if depth < 4:
        raise InvalidParameterError("depth must be at least 4")
    # shallow curves are sampled along their polyline so every scale stays resolved
    M = 4 ** max(depth, 7) + 1
    g1 = sample(f"hilbert-coordinate-1:{depth}", (0.0, 1.0), M)
    g2 = sample(f"hilbert-coordinate-2:{depth}", (0.0, 1.0), M)
    z = SampledFunction((0.0, 1.0), g1.values.real + 1j * g2.values.real)
    dims = _component_dims(z)
    cloud = graph_cloud(z, "complex-3d")
    last = max(max_scale_3d(cloud), DEFAULT_FIRST_SCALE + 3)
    dim3 = estimate_dimension(box_count_series_3d(cloud, (DEFAULT_FIRST_SCALE, last))).slope
    observed = {"dim_g1": dims["dim_re"], "dim_g2": dims["dim_im"], "dim_3d": dim3, "depth": depth}
    ok = all(abs(observed[k] - 1.5) <= DIMENSION_TOL for k in ("dim_g1", "dim_g2"))
    ok &= dim3 >= 2.0 - 0.15
    report = TheoremReport(
        "peano-remark",
        {"depth": depth},
        True,
        {"dim_g1": 1.5, "dim_g2": 1.5, "dim_3d_min": 2.0},
        observed,
        "consistent" if ok else "inconsistent",
    )
    report.notes.append("finite-depth box estimates approach the 3D lower bound 2 from below")
    return report
