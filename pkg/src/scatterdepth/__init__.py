"""Halfspace depth for scatter, concentration and shape matrices."""

from .analytic import (
    GAUSSIAN_QUARTILE,
    EllipticalModel,
    GaussianModel,
    IndependentCauchyModel,
    cauchy_region_check,
    cauchy_scatter_depth,
    cauchy_shape_depth,
    gaussian_region_bounds,
    gaussian_scatter_depth,
    gaussian_shape_depth,
    l1_sphere_extrema,
)
from .data import (
    Dataset,
    DirectionBudget,
    DirectionScheme,
    LocationKind,
    LocationSpec,
    MsdInterval,
    estimate_alpha,
    location_depth,
    msd_interval,
    tukey_median,
)
from .empirical import (
    DepthEvaluation,
    ExactScatterDepth2D,
    ScatterDepthEvaluator,
    Side,
    concentration_depth,
    pairwise_difference_depth,
    region_contains,
    scatter_depth,
    scatter_depth_sup_location,
)
from .mcd import McdFit, fast_mcd
from .pipeline import (
    DetectConfig,
    DetectionReport,
    GlobalBaseline,
    WindowedSeries,
    detect,
    global_baseline,
    load_windowed_csv,
)
from .search import (
    DeepestResult,
    PathProfile,
    deepest_scatter,
    deepest_shape,
    depth_along_path,
    max_quasi_concavity_deficit,
)
from .shape import (
    ScaleFunctional,
    ShapeDepthResult,
    ShapeMatrix,
    scale_and_shape,
    shape_depth,
    shape_region_contains,
)
from .spd import (
    KarcherMeanError,
    PathKind,
    PathSpec,
    SpdMatrix,
    frobenius_distance,
    geodesic_distance,
    karcher_mean,
    matrix_function,
    path_point,
)

__version__ = "0.1.0"
