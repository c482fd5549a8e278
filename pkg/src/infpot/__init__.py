"""Infinity-Laplacian potential theory on finite quasi-metric spaces.

Desk-scale numerical laboratory: asymmetric distances and Randers grids,
radial profiles and g-cones with comparison checks, a monotone fixed-point
solver for the normalized infinity Laplacian with absorption, and executable
completeness criteria (probe-decay dichotomy, maximum principles, capacity,
sharp power-absorption constants, and a near-maximum point finder).
"""

from .absorption import Absorption
from .cones import EtaProfile, GCone, check_cone_comparison, make_cone, radius, sliding_slope, solve_eta
from .errors import ConfigError, DomainError, InfpotError, InputError, SlopeInadmissibleError
from .principles import (
    CapacityEstimate,
    ExhaustionFamily,
    ThetaCase,
    bounded_incomplete_family,
    capacity,
    detect_completeness,
    eikonal_wmp_check,
    ekeland_point,
    grid_exhaustion,
    local_lipschitz_check,
    theta_liouville_check,
    wmp_check,
)
from .quasimetric import (
    DistanceField,
    QuasiMetricSpace,
    RandersNorm,
    STENCIL_4,
    STENCIL_8,
    backward_distance,
    ball,
    dual_norm,
    eccentricity,
    forward_distance,
    grid_space,
    lipschitz_constant,
    norm_eval,
    reversibility_constant,
    sphere,
)
from .scheme import (
    GridFunction,
    SchemeConfig,
    SchemeState,
    discrete_operator,
    eikonal_residual,
    slope_minus,
    slope_plus,
    solve_dirichlet,
    solve_obstacle,
    sup_convolution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
