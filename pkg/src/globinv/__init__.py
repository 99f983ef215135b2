"""Global inverses of smooth maps R^n -> R^n.

If Df(x) is invertible everywhere and |Df(x)^{-1}| is bounded, f is a
diffeomorphism, and f^{-1}(y) is the t = 1 point of the geodesic of the
pullback metric Df^T Df that starts at x0 with velocity
Df(x0)^{-1} (y - f(x0)). This package integrates that geodesic (or its
first-order continuation form), polishes the endpoint with Newton, and
estimates the boundedness constant numerically.
"""

from .errors import (
    DimensionMismatch,
    DomainError,
    GlobinvError,
    MaxStepsExceeded,
    ParseError,
    PathDiverged,
    SingularJacobian,
    SolverFailure,
    ToleranceNotMet,
)
from .expr import load_map_file, parse, to_smooth_map
from .geometry import (
    christoffel_metric,
    christoffel_pushforward,
    exp_map,
    geodesic_rhs,
    metric_tensor,
    speed,
)
from .maps import SmoothMap, fd_check, make_builtin
from .numerics import integrate_adaptive, OdeProblem, sigma_min, solve_linear
from .solver import (
    InversionOptions,
    estimate_hadamard,
    invert,
    invert_continuation,
    invert_geodesic,
    lipschitz_probe,
    newton_polish,
)

__version__ = "0.1.0"
