"""Secrecy-graph percolation laboratory.

Seeded Poisson sampling, secrecy-graph construction, component and degree
analytics, analytic percolation bounds, and high-confidence Monte-Carlo
threshold trials, all behind one deterministic seeding scheme.
"""

from .bounds import (
    BoundReport,
    hexagon_bound,
    hexagon_closed_probability,
    hexagon_optimal_side,
    hexagon_threshold_value,
    optimize_bound,
    rolling_ball_bound,
    rolling_ball_integrand,
)
from .components import (
    MODES,
    ComponentLabeling,
    EscapeStats,
    escape_fraction,
    escape_stats,
    reach,
    strongly_connected_components,
    undirected_components,
)
from .degrees import (
    DegreeHistogram,
    GWBatch,
    GWRun,
    chi_square_gof,
    empirical_degree_hist,
    extinction_probability,
    gw_batch,
    gw_generation_pmf,
    gw_simulate,
    indegree_pmf_d1,
    outdegree_pmf,
)
from .graph import (
    GraphView,
    GridIndex,
    SecrecyGraph,
    build_graph,
    guard_radius,
    variant_view,
    view_from_arrows,
)
from .mc import (
    BOUND_SIDES,
    ONE_DEP_THRESHOLD,
    TRIAL_REFERENCE,
    VARIANTS,
    ConfidenceReport,
    ExposureRegion,
    TrialBatch,
    TrialConfig,
    censored_graph,
    confidence,
    default_exposure_step,
    exposure_region,
    run_trials,
    scaled_reference_configs,
    trial_lower,
    trial_upper,
)
from .ppp import (
    PointSet,
    Seed,
    Window,
    ball_surface,
    ball_volume,
    sample_ppp,
    sample_ppp_from,
)
from .quadrature import QuadratureError

__version__ = "1.0.0"

__all__ = [
    "BOUND_SIDES",
    "MODES",
    "ONE_DEP_THRESHOLD",
    "TRIAL_REFERENCE",
    "VARIANTS",
    "BoundReport",
    "ComponentLabeling",
    "ConfidenceReport",
    "DegreeHistogram",
    "EscapeStats",
    "ExposureRegion",
    "GWBatch",
    "GWRun",
    "GraphView",
    "GridIndex",
    "PointSet",
    "QuadratureError",
    "SecrecyGraph",
    "Seed",
    "TrialBatch",
    "TrialConfig",
    "Window",
    "ball_surface",
    "ball_volume",
    "build_graph",
    "censored_graph",
    "chi_square_gof",
    "confidence",
    "default_exposure_step",
    "empirical_degree_hist",
    "escape_fraction",
    "escape_stats",
    "exposure_region",
    "extinction_probability",
    "gw_batch",
    "gw_generation_pmf",
    "gw_simulate",
    "guard_radius",
    "hexagon_bound",
    "hexagon_closed_probability",
    "hexagon_optimal_side",
    "hexagon_threshold_value",
    "indegree_pmf_d1",
    "optimize_bound",
    "outdegree_pmf",
    "reach",
    "rolling_ball_bound",
    "rolling_ball_integrand",
    "run_trials",
    "sample_ppp",
    "sample_ppp_from",
    "scaled_reference_configs",
    "strongly_connected_components",
    "trial_lower",
    "trial_upper",
    "undirected_components",
    "variant_view",
    "view_from_arrows",
    "__version__",
]
