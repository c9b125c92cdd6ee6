import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractal_lab.core import Partition
from fractal_lab.dimension import (
    BoxCountSeries,
    ContractionBounds,
    box_count_2d,
    box_count_3d,
    box_count_grid,
    box_count_series_2d,
    box_counts_nested,
    dimension_bounds,
    dyadic_deltas,
    estimate_contraction_bounds,
    estimate_dimension,
    hausdorff_distance,
    holder_exponent_estimate,
    holder_upper_bound,
    moran_solve,
    worker_count,
)
from fractal_lab.errors import (
    DegenerateFitError,
    DeltaTooSmallError,
    DimensionMismatchError,
    InsufficientResolutionError,
    InvalidParameterError,
    InvalidRatioError,
    InvariantViolation,
)
from fractal_lab.fif import FractalProblem, GraphCloud, ScalingFunction, build_ifs, graph_cloud
from fractal_lab.generators import sample

MORAN_06_03 = 0.85941784720104501  # 50-digit mpmath root of 0.6^s + 0.3^s = 1


class TestBoxCount2D:
    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_constant(self, n):
        assert box_count_2d(sample("constant:1.5", (0, 1), 1025), 1 / n) == n

    def test_identity(self):
        assert box_count_2d(sample("polynomial:0,1", (0, 1), 1025), 0.25) == 4

    def test_weierstrass(self):
        count = box_count_2d(sample("weierstrass:2,0.5", (0, 1), 2**14 + 1), 2**-8)
        assert 0.5 <= count / 2**12 <= 2.0

    def test_imag_component(self):
        f = sample("i*polynomial:0,1", (0, 1), 1025)
        assert box_count_2d(f, 0.25, "imag") == 4
        assert box_count_2d(f, 0.25, "real") == 4

    def test_preconditions(self):
        f = sample("polynomial:0,1", (0, 1), 101)
        with pytest.raises(DeltaTooSmallError):
            box_count_2d(f, 0.05)
        with pytest.raises(InvalidParameterError):
            box_count_2d(f, 0.75)
        with pytest.raises(InvalidParameterError):
            box_count_2d(f, 0.25, "modulus")


class TestBoxCount3D:
    def test_single_point(self):
        cloud = GraphCloud(np.array([[0.2, 0.3, 0.4]]))
        assert all(box_count_3d(cloud, d) == 1 for d in (1.0, 0.1, 1e-6))

    def test_two_points(self):
        assert box_count_3d(GraphCloud(np.array([[0, 0, 0], [1, 1, 1.0]])), 0.5) == 2

    def test_diagonal(self):
        t = np.linspace(0, 1, 10**5)
        assert abs(box_count_3d(GraphCloud(np.column_stack([t, t, t])), 0.01) - 100) <= 1

    def test_needs_3d(self):
        with pytest.raises(DimensionMismatchError):
            box_count_3d(GraphCloud(np.zeros((3, 2))), 0.1)

    def test_nested_matches_direct(self):
        f = sample("weierstrass:3,0.4,1 + i*takagi:0.6", (0, 1), 4097)
        cloud = graph_cloud(f)
        deltas = dyadic_deltas(1.0, 2, 10)
        assert box_counts_nested(cloud, deltas) == tuple(box_count_grid(cloud, d) for d in deltas)
        with pytest.raises(InvalidParameterError):
            box_counts_nested(cloud, (0.5, 0.2))


@given(st.integers(0, 10**6), st.integers(2, 9))
def test_count_monotone_and_nested(seed, j):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(200, 3)) * rng.uniform(0.1, 3, size=3)
    cloud = GraphCloud(pts)
    length = float(np.ptp(pts[:, 0]))
    coarse, fine = length * 2.0**-j, length * 2.0 ** -(j + 1)
    assert box_count_grid(cloud, coarse) <= box_count_grid(cloud, fine)
    assert box_counts_nested(cloud, (coarse, fine)) == (box_count_grid(cloud, coarse), box_count_grid(cloud, fine))


class TestEstimate:
    def test_power_laws(self):
        deltas = (1 / 4, 1 / 8, 1 / 16, 1 / 32)
        e1 = estimate_dimension(BoxCountSeries(deltas, (4, 8, 16, 32), "column-oscillation-2d"))
        e2 = estimate_dimension(BoxCountSeries(deltas, (16, 64, 256, 1024), "cube-grid-3d"))
        assert e1.slope == pytest.approx(1.0, abs=1e-12) and e1.r_squared == pytest.approx(1.0, abs=1e-12)
        assert e2.slope == pytest.approx(2.0, abs=1e-12)
        assert e1.fit_range == (1, 2)

    @given(st.sampled_from([2, 3]), st.integers(1, 3), st.integers(4, 12))
    def test_power_law_recovery(self, base, D, n):
        deltas = tuple(float(base) ** -j for j in range(1, n + 1))
        counts = tuple(base ** (D * j) for j in range(1, n + 1))
        est = estimate_dimension(BoxCountSeries(deltas, counts, "cube-grid-3d"))
        assert abs(est.slope - D) < 1e-12
        assert est.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_weierstrass_series(self):
        f = sample("weierstrass:2,0.5", (0, 1), 2**14 + 1)
        est = estimate_dimension(box_count_series_2d(f, "real", (4, 10)))
        assert abs(est.slope - 1.5) <= 0.1

    def test_errors(self):
        s3 = BoxCountSeries((0.5, 0.25, 0.125), (1, 2, 4), "cube-grid-3d")
        with pytest.raises(InsufficientResolutionError):
            estimate_dimension(s3)
        flat = BoxCountSeries((0.5, 0.25, 0.125, 0.0625), (3, 3, 3, 3), "cube-grid-3d")
        with pytest.raises(DegenerateFitError):
            estimate_dimension(flat)
        ok = BoxCountSeries((0.5, 0.25, 0.125, 0.0625), (1, 2, 4, 8), "cube-grid-3d")
        with pytest.raises(InvalidParameterError):
            estimate_dimension(ok, (2, 1))

    def test_series_validation(self):
        with pytest.raises(InvariantViolation):
            BoxCountSeries((0.5, 0.25), (4, 2), "cube-grid-3d")
        with pytest.raises(InvalidParameterError):
            BoxCountSeries((0.25, 0.5), (1, 2), "cube-grid-3d")
        with pytest.raises(InvalidParameterError):
            BoxCountSeries((0.5, 0.25), (1, 2), "guess")

    def test_thread_count_does_not_change_counts(self, monkeypatch):
        f = sample("weierstrass:2,0.5", (0, 1), 2**13 + 1)
        monkeypatch.setenv("FRACTAL_LAB_THREADS", "1")
        assert worker_count() == 1
        one = box_count_series_2d(f)
        monkeypatch.setenv("FRACTAL_LAB_THREADS", "4")
        assert worker_count() == 4
        assert box_count_series_2d(f) == one
        monkeypatch.setenv("FRACTAL_LAB_THREADS", "0")
        assert worker_count() >= 1


class TestMoran:
    def test_examples(self):
        assert moran_solve((0.5, 0.5)).exponent == pytest.approx(1.0, abs=1e-12)
        assert moran_solve((1 / 3, 1 / 3)).exponent == pytest.approx(math.log(2) / math.log(3), abs=1e-10)

    def test_frozen_oracle(self):
        root = moran_solve((0.6, 0.3))
        assert root.exponent == pytest.approx(MORAN_06_03, abs=1e-11)
        assert round(root.exponent, 2) == 0.86
        assert root.residual < 1e-12

    @given(st.integers(2, 6), st.floats(0.1, 0.9))
    def test_closed_form(self, m, c):
        assert abs(moran_solve([c] * m).exponent - math.log(m) / math.log(1 / c)) < 1e-10

    def test_large_root_bracket_growth(self):
        # 50 maps of ratio 0.9: root ln 50 / ln(1/0.9) is about 37
        assert moran_solve([0.9] * 50).exponent == pytest.approx(math.log(50) / math.log(1 / 0.9), abs=1e-9)

    @pytest.mark.parametrize("ratios", [(0.5,), (0.5, 1.2), (0.0, 0.5), (0.5, 1.0)])
    def test_invalid(self, ratios):
        with pytest.raises(InvalidRatioError):
            moran_solve(ratios)

    def test_bounds(self):
        r, R = dimension_bounds(ContractionBounds((0.5, 0.5), (0.5, 0.5)))
        assert r.exponent == R.exponent == pytest.approx(1.0)
        r, R = dimension_bounds(ContractionBounds((0.25, 0.25), (0.5, 0.5)))
        assert (r.exponent, R.exponent) == pytest.approx((0.5, 1.0))
        r, R = dimension_bounds(ContractionBounds((0.3,) * 3, (0.33,) * 3))
        assert r.exponent == pytest.approx(0.91248928939319844, abs=1e-10)
        assert R.exponent == pytest.approx(0.99093472113950069, abs=1e-10)

    def test_bounds_validation(self):
        with pytest.raises(InvalidRatioError):
            ContractionBounds((0.6, 0.5), (0.5, 0.5))
        with pytest.raises(InvalidRatioError):
            ContractionBounds((0.5,), (0.5, 0.5))

    def test_empirical_bounds(self):
        M = 257
        f = sample("polynomial:0,1", (0, 1), M)
        b = sample("polynomial:0,0,1", (0, 1), M)
        c = ScalingFunction.constant
        ifs = build_ifs(FractalProblem(Partition((0, 0.5, 1)), f, b, [c(0.3), c(0.3)]))
        bounds = estimate_contraction_bounds(ifs, n_pairs=2000, seed=3)
        assert bounds is not None and bounds.heuristic
        assert all(0 < lo <= hi < 1 for lo, hi in zip(bounds.lower, bounds.upper))
        assert bounds == estimate_contraction_bounds(ifs, n_pairs=2000, seed=3)


class TestHolderExponent:
    def test_upper_bound(self):
        assert holder_upper_bound(0.5) == 1.5
        assert holder_upper_bound(0.25) == 1.75
        assert holder_upper_bound(1.0) == 1.0
        for bad in (0.0, -0.1, 1.2):
            with pytest.raises(InvalidParameterError):
                holder_upper_bound(bad)

    def test_linear_clipped(self):
        assert holder_exponent_estimate(sample("polynomial:0,1", (0, 1), 2**12 + 1)).value == 1.0

    def test_sqrt(self):
        f = sample("polynomial:0", (0, 1), 2**14 + 1)
        f = type(f)((0, 1), np.sqrt(f.grid))
        assert abs(holder_exponent_estimate(f).value - 0.5) <= 0.05

    def test_weierstrass(self):
        est = holder_exponent_estimate(sample("weierstrass:2,0.5", (0, 1), 2**16 + 1))
        assert abs(est.value - 0.5) <= 0.05

    def test_resolution(self):
        with pytest.raises(InsufficientResolutionError):
            holder_exponent_estimate(sample("polynomial:0,1", (0, 1), 1000))


class TestHausdorff:
    def test_examples(self):
        a = GraphCloud(np.array([[0.0, 0.0]]))
        assert hausdorff_distance(a, a) == 0.0
        assert hausdorff_distance(a, GraphCloud(np.array([[3.0, 4.0]]))) == 5.0
        sq = np.array([[0, 0], [0, 1], [1, 0], [1, 1.0]])
        assert hausdorff_distance(GraphCloud(sq), GraphCloud(sq + [0.1, 0])) == pytest.approx(0.1)

    def test_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            hausdorff_distance(GraphCloud(np.zeros((2, 2))), GraphCloud(np.zeros((2, 3))))

    @given(st.integers(0, 10**6))
    def test_metric(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (GraphCloud(rng.normal(size=(rng.integers(1, 30), 3))) for _ in range(3))
        ab, ba = hausdorff_distance(a, b), hausdorff_distance(b, a)
        assert ab == ba
        assert hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-12
