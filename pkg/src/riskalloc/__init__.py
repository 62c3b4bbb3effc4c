"""Capacity planning from incident patterns: risk estimation and allocation.

The pipeline: estimate the incident intensity from historical point
patterns (adaptive kernel smoothing with data-driven bandwidths),
integrate it over nearest-station catchments to get per-station risks,
then allocate vehicles and crews by greedy minimax algorithms whose
optimality is certified by exhaustive oracles on small instances.
"""

from .allocate import (
    CostTable,
    CrewAllocation,
    VehicleAllocation,
    allocate_crews,
    allocate_vehicles,
    brute_force_minimax,
    closed_form_vehicles,
    greedy_convex_sum,
    minimax_via_cumsum,
)
from .bandwidth import (
    BandwidthSearch,
    cvl_area_estimate,
    cvl_score,
    default_h_grid,
    loo_cv_score,
    select_bandwidth,
)
from .errors import InfeasibleError, NumericError, ParseError
from .geometry import (
    CatchmentPartition,
    GridSpec,
    Point,
    PolygonWindow,
    RectWindow,
    Station,
    Window,
    build_partition,
    cell_area,
    window_area,
)
from .intensity import (
    IntensityField,
    PointPattern,
    ScalingFactors,
    adaptive_estimate,
    edge_weight,
    fixed_estimate,
    gaussian_kernel,
    integrate_field,
    pilot_estimate,
    scaling_factors,
)
from .risk import RiskTable, catchment_risks
from .simulate import IntensitySpec, sample_poisson

__version__ = "0.1.0"

__all__ = [
    "BandwidthSearch",
    "CatchmentPartition",
    "CostTable",
    "CrewAllocation",
    "GridSpec",
    "InfeasibleError",
    "IntensityField",
    "IntensitySpec",
    "NumericError",
    "ParseError",
    "Point",
    "PointPattern",
    "PolygonWindow",
    "RectWindow",
    "RiskTable",
    "ScalingFactors",
    "Station",
    "VehicleAllocation",
    "Window",
    "adaptive_estimate",
    "allocate_crews",
    "allocate_vehicles",
    "brute_force_minimax",
    "build_partition",
    "catchment_risks",
    "cell_area",
    "closed_form_vehicles",
    "cvl_area_estimate",
    "cvl_score",
    "default_h_grid",
    "edge_weight",
    "fixed_estimate",
    "gaussian_kernel",
    "greedy_convex_sum",
    "integrate_field",
    "loo_cv_score",
    "minimax_via_cumsum",
    "pilot_estimate",
    "sample_poisson",
    "scaling_factors",
    "select_bandwidth",
    "window_area",
]
