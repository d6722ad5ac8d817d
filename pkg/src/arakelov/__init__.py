"""Arakelov invariants of hyperelliptic Riemann surfaces from theta functions."""

from .errors import (
    ArakelovError,
    ConvergenceError,
    FamilyConditionError,
    GenericityError,
    InvalidInputError,
    NumericDegeneracyError,
    PathRefinementError,
    ProximityError,
    SingularChartError,
    SingularCurveError,
)
from .invariants import (
    InvariantReport,
    compute_delta,
    compute_invariants,
    compute_r,
    compute_s,
    faltings_residual,
    green_function,
    green_limit_at_weierstrass,
    guardia_residual,
    log_green,
    log_t_modular,
    log_t_theta_deriv,
    log_t_wronskian,
)
from .numerics import QuadratureConfig
from .surface import CurveSpec, PeriodData, RiemannSurface, SurfacePoint, build_curve
from .theta import Characteristic, SiegelPoint, theta_eval, theta_normed

__version__ = "0.1.0"
