"""scikit-learn style wrappers over the sampling, fixed-point and dimension code.

Each row of ``X`` is one function sampled on the uniform grid of ``domain``.
The wrappers hold configuration only; the numerical work lives in
:mod:`fractal_lab.fif` and :mod:`fractal_lab.dimension`.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_domain, check_samples
from .core import Partition, SampledFunction
from .dimension import (
    box_count_series_2d,
    box_count_series_3d,
    estimate_dimension,
    holder_exponent_estimate,
)
from .errors import InvalidParameterError
from .fif import (
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
    FractalProblem,
    ScalingFunction,
    alpha_fractal,
    graph_cloud,
    knot_indices,
)
from .generators import FunctionExpr


class AlphaFractalTransformer(TransformerMixin, BaseEstimator):
    """Map each sampled germ ``f`` to its alpha-fractal ``f^alpha``.

    Parameters
    ----------
    knots : sequence of float
        Interpolation knots; the first and last give the domain.
    alpha : complex or sequence of complex
        Constant scaling per subinterval. A scalar is used on every one.
    base : str
        Generator expression for ``b``. A bare ``linear-through-endpoints``
        term is completed with each row's endpoint values.
    tolerance, max_iterations
        Fixed-point stopping rule.

    Attributes
    ----------
    n_features_in_ : int
        Grid size seen in :meth:`fit`.
    reports_ : list of FixedPointReport
        Convergence reports from the last :meth:`transform`.
    """

    def __init__(
        self,
        knots: Sequence[float] = (0.0, 0.5, 1.0),
        alpha=0.2,
        base: str = "linear-through-endpoints + polynomial:0,1,-1",
        tolerance: float = DEFAULT_TOLERANCE,
        max_iterations: int = DEFAULT_MAX_ITERATIONS,
    ):
        self.knots = knots
        self.alpha = alpha
        self.base = base
        self.tolerance = tolerance
        self.max_iterations = max_iterations

    def _scalings(self, n_maps: int) -> Tuple[ScalingFunction, ...]:
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=np.complex128))
        if alpha.size == 1:
            alpha = np.repeat(alpha, n_maps)
        if alpha.size != n_maps:
            raise InvalidParameterError(f"need 1 or {n_maps} scaling values, got {alpha.size}")
        return tuple(ScalingFunction.constant(a) for a in alpha)

    def fit(self, X, y=None):
        X = check_samples(X)
        partition = Partition(tuple(self.knots))
        probe = SampledFunction(partition.domain, np.zeros(X.shape[1]))
        knot_indices(partition, probe)
        self._scalings(partition.n_maps)
        FunctionExpr.from_text(self.base, endpoints=(0.0, 0.0))
        self.partition_ = partition
        self.n_features_in_ = X.shape[1]
        return self

    def _problem(self, row: np.ndarray) -> FractalProblem:
        domain = self.partition_.domain
        f = SampledFunction(domain, row)
        expr = FunctionExpr.from_text(self.base, endpoints=(f.values[0], f.values[-1]))
        b = SampledFunction(domain, expr.evaluate(f.grid, domain))
        return FractalProblem(self.partition_, f, b, self._scalings(self.partition_.n_maps))

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "partition_")
        X = check_samples(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidParameterError(f"expected {self.n_features_in_} samples per row, got {X.shape[1]}")
        out = np.empty(X.shape, dtype=np.complex128)
        self.reports_ = []
        for i, row in enumerate(X):
            h, report = alpha_fractal(self._problem(row), self.tolerance, self.max_iterations)
            out[i] = h.values
            self.reports_.append(report)
        return out


_MODES = ("real2d", "imag2d", "complex3d")


class BoxCountingDimension(TransformerMixin, BaseEstimator):
    """Box-counting dimension of each sampled graph.

    Parameters
    ----------
    mode : {"real2d", "imag2d", "complex3d"}
        Column-oscillation counting of one component, or cube-grid counting
        of the graph in ``J x C``.
    domain : pair of float
    scales : (j1, j2), optional
        Dyadic levels; by default 4 up to the finest resolved level.
    fit_range : (lo, hi), optional
        Index range into the series; by default the end scales are dropped.

    Attributes
    ----------
    estimates_ : list of DimensionEstimate
    dimensions_ : ndarray of shape (n_series,)
    """

    def __init__(self, mode: str = "real2d", domain=(0.0, 1.0), scales=None, fit_range=None):
        self.mode = mode
        self.domain = domain
        self.scales = scales
        self.fit_range = fit_range

    def _estimate(self, f: SampledFunction):
        if self.mode == "complex3d":
            series = box_count_series_3d(graph_cloud(f, "complex-3d"), self.scales)
        else:
            series = box_count_series_2d(f, "real" if self.mode == "real2d" else "imag", self.scales)
        return estimate_dimension(series, self.fit_range)

    def fit(self, X, y=None):
        if self.mode not in _MODES:
            raise InvalidParameterError(f"mode must be one of {_MODES}, got {self.mode!r}")
        domain = check_domain(self.domain)
        X = check_samples(X)
        self.estimates_ = [self._estimate(SampledFunction(domain, row)) for row in X]
        self.dimensions_ = np.array([e.slope for e in self.estimates_])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        """Column of slopes, one per row of ``X``."""
        check_is_fitted(self, "estimates_")
        domain = check_domain(self.domain)
        X = check_samples(X)
        slopes = [self._estimate(SampledFunction(domain, row)).slope for row in X]
        return np.array(slopes).reshape(-1, 1)


class HolderExponentEstimator(TransformerMixin, BaseEstimator):
    """Hölder exponent ``sigma_hat`` of each row from oscillation scaling.

    Parameters
    ----------
    component : {"real", "imag", "complex"}
    domain : pair of float
    """

    def __init__(self, component: str = "real", domain=(0.0, 1.0)):
        self.component = component
        self.domain = domain

    def fit(self, X, y=None):
        X = check_samples(X)
        self.exponents_ = self._exponents(X)
        self.n_features_in_ = X.shape[1]
        return self

    def _exponents(self, X) -> np.ndarray:
        domain = check_domain(self.domain)
        X = check_samples(X)
        return np.array([holder_exponent_estimate(SampledFunction(domain, row), self.component).value for row in X])

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "exponents_")
        return self._exponents(X).reshape(-1, 1)
