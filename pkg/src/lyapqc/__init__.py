"""Numerical toolkit for Lyapunov regions, quasihyperbolic distortion and
sampled inclusion checks for quasiconformal and harmonic maps."""

from .complexgeom import (
    INF,
    ConstantEstimates,
    ElementaryDomainSpec,
    Isometry,
    LypRegionSpec,
    SampledCurve,
    apply_isometry,
    build_circle_curve,
    build_elementary_domain,
    build_gamma_curve,
    build_graph_curve,
    estimate_arc_chord,
    estimate_constants,
    estimate_l1,
    make_R_a,
    make_T_b,
    region_contains,
    second_constant,
)
from .errors import (
    CompositionError,
    DataError,
    DomainError,
    GeometryError,
    LyapqcError,
    NumericalError,
    ParameterDomainError,
    PreconditionError,
    RenderError,
    ScenarioError,
)
from .mapzoo import (
    BoundaryFunction,
    DilatationSample,
    MapHandle,
    compose,
    dilatation_at,
    dilatation_scan,
    make_angular_stretch,
    make_log_quotient,
    make_radial_stretch,
    poisson_extend,
    theodorsen_conformal,
)
from .qhyperbolic import (
    MobiusPair,
    check_gehring_osgood,
    check_X_angle_bound,
    convex_angle,
    mobius_A0,
    mobius_A0_inv,
    mobius_X,
    mobius_Y,
    pull_back_region_through_Y,
    qh_distance,
)

__version__ = "0.1.0"
