"""Numerical engine for p-energy functionals on Finsler manifolds.

Library layout:

* :mod:`finsler_penergy.metric` -- metric contract, axiom validation,
  built-in catalog (euclidean, sphere, randers);
* :mod:`finsler_penergy.connection` -- Cartan connection coefficients and
  covariant derivatives along curves;
* :mod:`finsler_penergy.curve` -- discretized curves, p-energy and length;
* :mod:`finsler_penergy.variation` -- first/second variation, geodesic
  solving, index-form assembly and critical-point classification;
* :mod:`finsler_penergy.jacobi` -- curvature operator, Jacobi fields,
  conjugate points and constant-curvature extremum bounds;
* :mod:`finsler_penergy.cli` -- experiment runner (``fpe`` entry point).
"""

__version__ = "0.1.0"

from .errors import (
    BadRegime,
    ChartDomain,
    ConfigError,
    FinslerError,
    GridTooCoarse,
    NoConvergence,
    NotAGeodesic,
    NotPositiveDefinite,
    ZeroVelocity,
)
from .metric import (
    FinslerMetric,
    ValidationReport,
    absolute_energy_check,
    build_metric,
    euclidean,
    fundamental_tensor,
    randers,
    scalar_product,
    sphere,
    validate_metric,
)
from .connection import (
    ConnectionSample,
    VectorFieldAlongCurve,
    cartan_C,
    cartan_L,
    connection_sample,
    covariant_derivative,
    formal_christoffel,
    metric_compatibility_residual,
    nonlinear_connection,
)
from .curve import (
    DiscretizedCurve,
    PEnergyValue,
    from_function,
    hoelder_gap,
    length,
    line,
    p_energy,
    reparametrize_constant_speed,
    velocity,
)
from .variation import (
    CriticalPointClassification,
    FirstVariationResult,
    IndexFormMatrix,
    assemble_index_matrix,
    classify_critical_point,
    first_variation,
    geodesic_residual,
    index_form,
    parallel_frame,
    shoot_geodesic,
    solve_geodesic_bvp,
)
from .jacobi import (
    ConjugateReport,
    CurvatureSample,
    JacobiSolution,
    R2_operator,
    constant_curvature_R2,
    curvature_R,
    ep_extremum_bounds,
    find_conjugate_points,
    great_circle_arc,
    integrate_jacobi,
    sphere_wraparound_survey,
)

__all__ = [
    "BadRegime", "ChartDomain", "ConfigError", "FinslerError",
    "GridTooCoarse", "NoConvergence", "NotAGeodesic", "NotPositiveDefinite",
    "ZeroVelocity",
    "FinslerMetric", "ValidationReport", "absolute_energy_check",
    "build_metric", "euclidean", "fundamental_tensor", "randers",
    "scalar_product", "sphere", "validate_metric",
    "ConnectionSample", "VectorFieldAlongCurve", "cartan_C", "cartan_L",
    "connection_sample", "covariant_derivative", "formal_christoffel",
    "metric_compatibility_residual", "nonlinear_connection",
    "DiscretizedCurve", "PEnergyValue", "from_function", "hoelder_gap",
    "length", "line", "p_energy", "reparametrize_constant_speed", "velocity",
    "CriticalPointClassification", "FirstVariationResult", "IndexFormMatrix",
    "assemble_index_matrix", "classify_critical_point", "first_variation",
    "geodesic_residual", "index_form", "parallel_frame", "shoot_geodesic",
    "solve_geodesic_bvp",
    "ConjugateReport", "CurvatureSample", "JacobiSolution", "R2_operator",
    "constant_curvature_R2", "curvature_R", "ep_extremum_bounds",
    "find_conjugate_points", "great_circle_arc", "integrate_jacobi",
    "sphere_wraparound_survey",
]
