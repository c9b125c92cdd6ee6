import numpy as np
import pytest
from hypothesis import given, strategies as st

from fractal_lab.core import Partition, SampledFunction, sup_distance
from fractal_lab.dimension import directed_hausdorff, hausdorff_distance
from fractal_lab.errors import (
    BaseEqualsGermError,
    EndpointMismatchError,
    GridMismatchError,
    InvalidParameterError,
    JoinConditionError,
    NoConvergenceError,
    ScalingTooLargeError,
)
from fractal_lab.fif import (
    AffineMapX,
    FractalProblem,
    GraphCloud,
    ScalingFunction,
    affine_maps,
    alpha_fractal,
    build_ifs,
    chaos_game,
    general_fif,
    graph_cloud,
)
from fractal_lab.generators import sample
from oracles import alpha_fractal_residual, fif_residual

const = ScalingFunction.constant


def t_problem(M=2**13 + 1, alpha=0.3, knots=(0, 0.5, 1)):
    f = sample("polynomial:0,1", (0, 1), M)
    b = sample("polynomial:0,0,1", (0, 1), M)
    return FractalProblem(Partition(knots), f, b, [const(alpha)] * (len(knots) - 1))


class TestMaps:
    def test_uniform(self):
        maps = affine_maps(Partition((0, 0.5, 1)))
        assert [(m.a, m.d) for m in maps] == [(0.5, 0.0), (0.5, 0.5)]

    def test_nonuniform(self):
        maps = affine_maps(Partition((0, 0.25, 1)))
        assert [(m.a, m.d) for m in maps] == [(0.25, 0.0), (0.75, 0.25)]

    def test_inverse(self):
        m = AffineMapX(0.25, 0.5)
        assert m.inverse(m(0.3)) == pytest.approx(0.3)

    @given(st.lists(st.floats(0.01, 10), min_size=2, max_size=8))
    def test_open_images_disjoint(self, widths):
        knots = np.concatenate([[0.0], np.cumsum(widths)])
        maps = affine_maps(Partition(tuple(knots)))
        x1, xN = knots[0], knots[-1]
        images = [(m(x1), m(xN)) for m in maps]
        for (_, r), (l, _) in zip(images, images[1:]):
            assert r <= l + 1e-12 * xN


class TestProblemValidation:
    def test_scaling_too_large(self):
        with pytest.raises(ScalingTooLargeError):
            t_problem(M=65, alpha=1.0)

    def test_sampled_scaling_sup(self):
        f = sample("polynomial:0,1", (0, 1), 65)
        big = ScalingFunction("sampled", sample("polynomial:1.2,-1", (0, 1), 65))
        with pytest.raises(ScalingTooLargeError):
            FractalProblem(Partition((0, 0.5, 1)), f, f * 1 + sample("polynomial:0,1,-1", (0, 1), 65), [big, big])

    def test_base_equals_germ(self):
        f = sample("polynomial:0,1", (0, 1), 65)
        with pytest.raises(BaseEqualsGermError):
            FractalProblem(Partition((0, 0.5, 1)), f, f, [const(0.1)] * 2)

    def test_endpoint_mismatch(self):
        f = sample("polynomial:0,1", (0, 1), 65)
        with pytest.raises(EndpointMismatchError):
            FractalProblem(Partition((0, 0.5, 1)), f, f + 0.1, [const(0.1)] * 2)

    def test_knot_off_grid(self):
        f = sample("polynomial:0,1", (0, 1), 64)
        b = sample("polynomial:0,0,1", (0, 1), 64)
        with pytest.raises(GridMismatchError):
            FractalProblem(Partition((0, 0.5, 1)), f, b, [const(0.1)] * 2)

    def test_scaling_count(self):
        with pytest.raises(InvalidParameterError):
            f = sample("polynomial:0,1", (0, 1), 65)
            FractalProblem(Partition((0, 0.5, 1)), f, sample("polynomial:0,0,1", (0, 1), 65), [const(0.1)])

    def test_default_values(self):
        p = t_problem(M=65)
        assert p.values == (0, 0.5, 1)
        assert p.alpha_sup == pytest.approx(0.3)


class TestAlphaFractal:
    def test_alpha_zero_identity(self):
        p = t_problem(M=257, alpha=0.0)
        h, rep = alpha_fractal(p)
        assert sup_distance(h, p.germ) == 0.0
        assert rep.final_change == 0.0 and rep.iterations == 1 and rep.converged

    def test_interpolation(self):
        h, rep = alpha_fractal(t_problem(), 1e-9)
        np.testing.assert_allclose(h.evaluate(np.array([0, 0.5, 1])), [0, 0.5, 1], atol=1e-8)
        assert rep.converged and rep.contraction_ratio_observed <= 0.3 + 0.05

    def test_residual(self):
        p = t_problem()
        h, _ = alpha_fractal(p, 1e-9)
        rng = np.random.default_rng(0)
        t = h.grid[rng.integers(0, h.size, 1000)]
        r = alpha_fractal_residual(
            p.partition.knots, h.grid, p.germ.values, p.base.values, h.values, lambda k, u: 0.3, t
        )
        assert r.max() < 1e-7

    def test_nonuniform_interpolated_pullback(self):
        # (0, 0.3, 1): P_k images of grid points fall between samples
        M = 1001
        f = sample("trig-sum:1,1,0", (0, 1), M)
        b = f + sample("polynomial:0,1,-1", (0, 1), M)
        p = FractalProblem(Partition((0, 0.3, 1)), f, b, [const(0.25j), const(-0.2)])
        h, rep = alpha_fractal(p, 1e-11)
        idx = [0, 300, 1000]
        np.testing.assert_allclose(h.values[idx], f.values[idx], atol=1e-9)
        t = h.grid[np.random.default_rng(1).integers(0, M, 500)]
        alphas = (0.25j, -0.2)
        r = alpha_fractal_residual(p.partition.knots, h.grid, f.values, b.values, h.values, lambda k, u: alphas[k], t)
        assert r.max() < 1e-9

    def test_affine_scaling(self):
        M = 2**10 + 1
        f = sample("weierstrass:2,0.5", (0, 1), M)
        b = f + sample("polynomial:0,1,-1", (0, 1), M)
        s = ScalingFunction("affine-in-t", (0.2, 0.1j))
        p = FractalProblem(Partition((0, 0.5, 1)), f, b, [s, s])
        h, rep = alpha_fractal(p, 1e-11)
        t = h.grid[::7]
        r = alpha_fractal_residual(
            p.partition.knots, h.grid, f.values, b.values, h.values, lambda k, u: 0.2 * u + 0.1j, t
        )
        assert r.max() < 1e-9

    def test_no_convergence(self):
        with pytest.raises(NoConvergenceError) as info:
            alpha_fractal(t_problem(M=257, alpha=0.9), 1e-12, max_iterations=3)
        assert info.value.exit_code == 3
        assert info.value.report.iterations == 3 and not info.value.report.converged

    def test_bad_tolerance(self):
        with pytest.raises(InvalidParameterError):
            alpha_fractal(t_problem(M=65), 0.0)

    @given(
        st.complex_numbers(max_magnitude=0.9, allow_nan=False),
        st.complex_numbers(max_magnitude=0.9, allow_nan=False),
        st.sampled_from(["weierstrass:2,0.5", "takagi", "trig-sum:1,3,0.2", "polynomial:1,-1,2"]),
    )
    def test_contraction_and_knots(self, a1, a2, germ):
        M = 2**9 + 1
        f = sample(germ, (0, 1), M)
        b = f + sample("polynomial:0,1,-1", (0, 1), M)
        p = FractalProblem(Partition((0, 0.5, 1)), f, b, [const(a1), const(a2)])
        h, rep = alpha_fractal(p, 1e-10, 400)
        assert rep.contraction_ratio_observed <= max(abs(a1), abs(a2)) + 0.05
        idx = [0, M // 2, M - 1]
        assert np.max(np.abs(h.values[idx] - f.values[idx])) <= 1e-9


class TestGeneralFIF:
    def test_linear_bridge(self):
        M = 129
        part = Partition((0, 0.5, 1))
        y = (0, 1 + 1j, -0.5)
        t = np.linspace(0, 1, M)
        q = [SampledFunction((0, 1), y[k] + (y[k + 1] - y[k]) * t) for k in range(2)]
        h, _ = general_fif(part, y, [const(0)] * 2, q)
        expected = np.interp(t, part.knots, np.real(y)) + 1j * np.interp(t, part.knots, np.imag(y))
        np.testing.assert_allclose(h.values, expected, atol=1e-14)

    def test_interpolation_and_residual(self):
        M = 2**12 + 1
        part = Partition((0, 0.5, 1))
        y = (0, 1j, 0)
        alpha = 0.4
        t = np.linspace(0, 1, M)
        q = [
            SampledFunction((0, 1), (y[0] - alpha * y[0]) + ((y[1] - alpha * y[2]) - (y[0] - alpha * y[0])) * t),
            SampledFunction((0, 1), (y[1] - alpha * y[0]) + ((y[2] - alpha * y[2]) - (y[1] - alpha * y[0])) * t),
        ]
        h, rep = general_fif(part, y, [const(alpha)] * 2, q, 1e-12)
        assert abs(h.evaluate(np.array([0.5]))[0] - 1j) < 1e-8
        r = fif_residual(part.knots, h.grid, h.values, [alpha, alpha], [qq.values for qq in q], h.grid)
        assert r.max() < 1e-7

    def test_join_violation(self):
        t = np.linspace(0, 1, 65)
        q = [SampledFunction((0, 1), t), SampledFunction((0, 1), t)]
        with pytest.raises(JoinConditionError):
            general_fif(Partition((0, 0.5, 1)), (0, 1, 0), [const(0.2)] * 2, q)


class TestIFS:
    def test_join_conditions(self):
        p = t_problem(M=257)
        ifs = build_ifs(p)
        for k in range(2):
            assert abs(ifs.psi(k, np.array([0.0]), p.values[0])[0] - p.values[k]) < 1e-10
            assert abs(ifs.psi(k, np.array([1.0]), p.values[-1])[0] - p.values[k + 1]) < 1e-10

    def test_chaos_game_bounds_and_determinism(self):
        ifs = build_ifs(t_problem(M=257))
        a = chaos_game(ifs, 5000, seed=4)
        b = chaos_game(ifs, 5000, seed=4)
        assert len(a) == 5000
        np.testing.assert_array_equal(a.points, b.points)
        assert a.points[:, 0].min() >= 0 and a.points[:, 0].max() <= 1
        assert not np.array_equal(a.points, chaos_game(ifs, 5000, seed=5).points)

    def test_chaos_game_matches_grid(self):
        p = t_problem()
        h, _ = alpha_fractal(p, 1e-12)
        dense = graph_cloud(h)
        cloud = chaos_game(build_ifs(p), 10**6, seed=1)
        # bounding box of the attractor, inflated by 1e-9
        lo, hi = dense.points.min(axis=0), dense.points.max(axis=0)
        assert np.all(cloud.points >= lo - 1e-9 - h.step) and np.all(cloud.points <= hi + 1e-9 + h.step)
        coverage = directed_hausdorff(dense, cloud)
        assert hausdorff_distance(cloud, dense) < 4 * (h.step + coverage)


class TestGraphCloud:
    def test_lemma_identification(self):
        g = sample("weierstrass:2,0.4", (0, 1), 513).real
        h = sample("takagi", (0, 1), 513).real
        z = SampledFunction((0, 1), g.values.real + 1j * h.values.real)
        np.testing.assert_array_equal(graph_cloud(z, "complex-3d").points, graph_cloud(g, "pair-3d", h).points)

    def test_modes(self):
        zero = sample("constant:0", (0, 1), 33)
        assert np.all(graph_cloud(zero, "real-2d").points[:, 1] == 0)
        line = sample("polynomial:0,1 + i*polynomial:0,1", (0, 1), 33)
        pts = graph_cloud(line, "complex-3d").points
        np.testing.assert_array_equal(pts[:, 0], pts[:, 1])
        np.testing.assert_array_equal(pts[:, 0], pts[:, 2])
        assert len(graph_cloud(line, "imag-2d")) == 33

    def test_errors(self):
        f = sample("constant:0", (0, 1), 33)
        with pytest.raises(InvalidParameterError):
            graph_cloud(f, "pair-3d")
        with pytest.raises(GridMismatchError):
            graph_cloud(f, "pair-3d", sample("constant:0", (0, 1), 34))
        with pytest.raises(InvalidParameterError):
            graph_cloud(f, "4d")
        with pytest.raises(InvalidParameterError):
            GraphCloud(np.zeros((0, 3)))
