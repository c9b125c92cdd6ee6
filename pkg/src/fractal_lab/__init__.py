"""Fractal interpolation functions on complex-valued data and their graph dimensions."""

from .core import (
    Partition,
    SampledFunction,
    holder_norm,
    holder_seminorm,
    lipschitz_estimate,
    sup_distance,
    sup_norm,
    total_variation,
)
from .dimension import (
    BoxCountSeries,
    ContractionBounds,
    DimensionEstimate,
    MoranRoot,
    box_count_2d,
    box_count_3d,
    box_count_series_2d,
    box_count_series_3d,
    dimension_bounds,
    estimate_dimension,
    hausdorff_distance,
    holder_exponent_estimate,
    holder_upper_bound,
    moran_solve,
)
from .errors import (
    FractalLabError,
    InputError,
    InvariantViolation,
    NoConvergenceError,
    NumericalError,
)
from .fif import (
    FractalProblem,
    GraphCloud,
    IFSSystem,
    ScalingFunction,
    alpha_fractal,
    build_ifs,
    chaos_game,
    general_fif,
    graph_cloud,
)
from .generators import FunctionExpr, GeneratorSpec, sample
from .theorems import (
    TheoremConstants,
    TheoremReport,
    check_bounds_theorem,
    check_bv_theorem,
    check_holder_theorem,
    check_mainthm,
    compare_graph_dimensions,
    estimate_constants,
    peano_remark_experiment,
)

__version__ = "0.1.0"
