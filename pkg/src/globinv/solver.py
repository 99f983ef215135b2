"""Global inversion of maps satisfying the Hadamard condition.

Two routes compute ``x`` with ``f(x) = y`` starting from a seed ``x0``:

* continuation: integrate ``x'(t) = Df(x)^{-1} (y - f(x0))`` on [0, 1],
  whose image ``f(x(t))`` is the segment from ``f(x0)`` to ``y``;
* geodesic: shoot the geodesic of the pullback metric from ``x0`` with
  initial velocity ``Df(x0)^{-1} (y - f(x0))`` and read off its position
  at ``t = 1``.

Both trace the same curve. A damped Newton polish removes the
discretization error. When ``|Df^{-1}|`` is bounded the curve exists for
every ``y``; when it is not (e.g. the complex exponential) the path runs
off to infinity or hits a critical point, and the report says so.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import PathDiverged, SolverFailure, ToleranceNotMet
from .geometry import GeodesicTrace, exp_map
from .maps import evaluate, jacobian
from .numerics import OdeProblem, as_vector, integrate_adaptive, sigma_min, solve_linear

SCHEMA_VERSION = 1
METHODS = ("auto", "continuation", "geodesic")


@dataclass(frozen=True)
class InversionOptions:
    method: str = "auto"
    rtol: float = 1e-10
    atol: float = 1e-12
    polish_tol: float = 1e-10
    max_polish_iters: int = 20
    state_bound: float = 1e8
    max_steps: int = 100_000
    x0: tuple = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("ODE tolerances must be positive")
        if not self.polish_tol >= np.finfo(float).eps:
            raise ValueError("polish_tol below machine precision")

    def seed_point(self, n):
        return np.zeros(n) if self.x0 is None else as_vector(self.x0, n)


@dataclass
class Failure:
    kind: str
    message: str
    t: float = None
    position: np.ndarray = None

    @classmethod
    def from_exception(cls, exc):
        pos = None if exc.position is None else np.asarray(exc.position, dtype=float)
        t = None if exc.t is None else float(exc.t)
        return cls(exc.kind, str(exc), t, pos)

    def to_dict(self):
        return {
            "kind": self.kind,
            "message": self.message,
            "t": _num(self.t),
            "position": _vec(self.position),
        }


@dataclass
class InversionReport:
    solution: np.ndarray
    residual: float
    method_used: str
    ode_steps: int
    polish_iters: int
    trace: GeodesicTrace
    straightness_deviation: float
    failure: Failure = None

    @property
    def ok(self):
        return self.failure is None

    @property
    def endpoint(self):
        """Position at t = 1 before the Newton polish."""
        return None if self.trace is None else self.trace.final_position

    def raise_if_failed(self):
        if self.failure is not None:
            raise ToleranceNotMet(self.failure.message) if self.failure.kind == "tolerance_not_met" \
                else SolverFailure(f"{self.failure.kind}: {self.failure.message}")
        return self

    def to_dict(self, include_trace=True):
        return {
            "schema_version": SCHEMA_VERSION,
            "solution": _vec(self.solution),
            "residual": _num(self.residual),
            "method_used": self.method_used,
            "ode_steps": self.ode_steps,
            "polish_iters": self.polish_iters,
            "trace": self.trace.to_dict() if (include_trace and self.trace is not None) else None,
            "straightness_deviation": _num(self.straightness_deviation),
            "failure": None if self.failure is None else self.failure.to_dict(),
        }


@dataclass
class HadamardEstimate:
    c_hat: float
    argmin: np.ndarray
    box: list
    samples: int
    refined: bool

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "c_hat": _num(self.c_hat),
            "argmin": _vec(self.argmin),
            "box": [list(map(float, iv)) for iv in self.box],
            "samples": self.samples,
            "refined": self.refined,
        }


@dataclass
class LipschitzProbe:
    c_hat: float
    pairs: int
    min_ratio: float
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "c_hat": _num(self.c_hat),
            "pairs": self.pairs,
            "min_ratio": _num(self.min_ratio),
            "violations": self.violations,
        }


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _vec(v):
    return None if v is None else [_num(c) for c in np.asarray(v, dtype=float)]


def segment_distance(p, a, b):
    """Euclidean distance from ``p`` to the segment [a, b]."""
    d = b - a
    dd = d @ d
    s = 0.0 if dd == 0.0 else min(1.0, max(0.0, float((p - a) @ d) / dd))
    return float(np.linalg.norm(p - a - s * d))


def _straightness(trace, a, b):
    return max(segment_distance(fx, a, b) for fx in trace.images)


def newton_polish(fmap, y, x_init, tol=1e-10, max_iters=20, history=None):
    """Damped Newton on ``f(x) = y``; returns ``(x, iterations)``.

    The step is halved (at most 30 times) while it increases the residual.
    Residual norms are appended to ``history`` when a list is given.
    """
    y = as_vector(y, fmap.dim)
    x = as_vector(x_init, fmap.dim).copy()
    r = evaluate(fmap, x) - y
    rn = float(np.linalg.norm(r))
    if history is not None:
        history.append(rn)
    for it in range(max_iters + 1):
        if rn <= tol:
            return x, it
        if it == max_iters:
            break
        dx = solve_linear(jacobian(fmap, x), r)
        lam = 1.0
        for _ in range(31):
            x_try = x - lam * dx
            r_try = evaluate(fmap, x_try) - y
            rn_try = float(np.linalg.norm(r_try))
            if rn_try <= rn:
                break
            lam *= 0.5
        else:
            raise ToleranceNotMet(
                f"Newton step cannot reduce residual {rn:.3e}", position=x.copy()
            )
        x, r, rn = x_try, r_try, rn_try
        if history is not None:
            history.append(rn)
    raise ToleranceNotMet(
        f"residual {rn:.3e} above {tol:g} after {max_iters} Newton iterations", position=x.copy()
    )


def _failed(fmap, y, method, exc, trace, a, b):
    pos = exc.position
    if pos is None and trace is not None:
        pos = trace.final_position
    n = fmap.dim
    if pos is not None and pos.size == 2 * n:
        pos = pos[:n]
        exc.position = pos
    with np.errstate(all="ignore"):
        try:
            residual = float(np.linalg.norm(evaluate(fmap, pos) - y)) if pos is not None else None
        except (ValueError, ArithmeticError, SolverFailure):
            residual = None
    straight = _straightness(trace, a, b) if trace is not None and len(trace.t) else None
    return InversionReport(
        solution=pos,
        residual=residual,
        method_used=method,
        ode_steps=0 if trace is None else trace.steps,
        polish_iters=0,
        trace=trace,
        straightness_deviation=straight,
        failure=Failure.from_exception(exc),
    )


def _finish(fmap, y, method, trace, opts, a, b):
    straight = _straightness(trace, a, b)
    try:
        x, iters = newton_polish(fmap, y, trace.final_position, opts.polish_tol,
                                 opts.max_polish_iters)
    except SolverFailure as exc:
        return _failed(fmap, y, method, exc, trace, a, b)
    return InversionReport(
        solution=x,
        residual=float(np.linalg.norm(evaluate(fmap, x) - y)),
        method_used=method,
        ode_steps=trace.steps,
        polish_iters=iters,
        trace=trace,
        straightness_deviation=straight,
    )


def _partial_continuation(fmap, steps, direction):
    if not steps:
        return None
    ts = [t for t, _ in steps]
    xs = np.array([x for _, x in steps])
    vs = []
    for x in xs:
        try:
            vs.append(solve_linear(jacobian(fmap, x), direction))
        except SolverFailure:
            vs.append(np.full(fmap.dim, np.nan))
    return GeodesicTrace.from_samples(fmap, ts, xs, vs)


def invert_continuation(fmap, y, opts=None):
    """Follow ``x' = Df(x)^{-1} (y - f(x0))`` from ``x0`` to ``t = 1``."""
    opts = opts or InversionOptions()
    n = fmap.dim
    y = as_vector(y, n)
    x0 = opts.seed_point(n)
    fx0 = evaluate(fmap, x0)
    direction = y - fx0

    def rhs(t, x):
        v = solve_linear(jacobian(fmap, x), direction)
        # the geodesic route bounds |velocity| through its state; do the same here
        if np.linalg.norm(v) > opts.state_bound:
            raise PathDiverged(f"path speed exceeded {opts.state_bound:g}")
        return v

    try:
        solve_linear(jacobian(fmap, x0), direction)
        steps = integrate_adaptive(
            OdeProblem(rhs, 0.0, 1.0, x0, opts.rtol, opts.atol, opts.max_steps,
                       max(opts.state_bound, 2 * np.linalg.norm(x0) + 1))
        )
    except SolverFailure as exc:
        if exc.t is None:
            exc.t = 0.0
        trace = _partial_continuation(fmap, getattr(exc, "steps", None), direction)
        return _failed(fmap, y, "continuation", exc, trace, fx0, y)
    trace = _partial_continuation(fmap, steps, direction)
    return _finish(fmap, y, "continuation", trace, opts, fx0, y)


def invert_geodesic(fmap, y, opts=None):
    """Shoot the pullback-metric geodesic from ``x0`` and polish its t = 1 point."""
    opts = opts or InversionOptions()
    n = fmap.dim
    y = as_vector(y, n)
    x0 = opts.seed_point(n)
    fx0 = evaluate(fmap, x0)
    try:
        u = solve_linear(jacobian(fmap, x0), y - fx0)
        trace = exp_map(fmap, x0, u, 1.0, opts.rtol, opts.atol, opts.max_steps,
                        max(opts.state_bound, 2 * np.linalg.norm(np.concatenate([x0, u])) + 1))
    except SolverFailure as exc:
        if exc.t is None:
            exc.t = 0.0
        steps = getattr(exc, "steps", None)
        trace = None
        if steps:
            ys = np.array([s for _, s in steps])
            trace = GeodesicTrace.from_samples(fmap, [t for t, _ in steps], ys[:, :n], ys[:, n:])
        return _failed(fmap, y, "geodesic", exc, trace, fx0, y)
    return _finish(fmap, y, "geodesic", trace, opts, fx0, y)


def invert(fmap, y, opts=None):
    """Compute ``f^{-1}(y)``.

    ``method='auto'`` runs continuation and falls back to the geodesic
    route when the Newton polish does not reach ``polish_tol``.
    """
    opts = opts or InversionOptions()
    if opts.method == "continuation":
        return invert_continuation(fmap, y, opts)
    if opts.method == "geodesic":
        return invert_geodesic(fmap, y, opts)
    report = invert_continuation(fmap, y, opts)
    if report.failure is not None and report.failure.kind == "tolerance_not_met":
        return invert_geodesic(fmap, y, opts)
    return report


def invert_many(fmap, targets, opts=None, workers=None):
    """Invert several targets; results follow the input order."""
    if workers is None or workers <= 1:
        return [invert(fmap, y, opts) for y in targets]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda y: invert(fmap, y, opts), targets))


def _c_at(fmap, x):
    return sigma_min(jacobian(fmap, x)) ** 2


def _golden_section(func, lo, hi, iters=50):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = func(d)
    return (c, fc) if fc <= fd else (d, fd)


def _normalize_box(box, n):
    box = [tuple(map(float, iv)) for iv in box]
    if len(box) != n:
        raise ValueError(f"box has {len(box)} intervals, map dimension is {n}")
    for lo, hi in box:
        if not lo < hi:
            raise ValueError(f"degenerate box interval [{lo}, {hi}]")
    return box


def estimate_hadamard(fmap, box, n_grid=21, n_random=0, refine=False, rng_seed=0,
                      sweeps=10):
    """Sampled lower estimate of c = inf sigma_min(Df)^2 over ``box``.

    This is a heuristic: it returns the smallest value seen on a regular
    grid (``n_grid`` points per axis, row-major) plus ``n_random`` seeded
    uniform points, optionally improved by golden-section coordinate
    descent. It cannot certify the infimum over all of R^n.
    """
    n = fmap.dim
    box = _normalize_box(box, n)
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    axes = [np.linspace(lo, hi, n_grid) for lo, hi in box]
    points = [np.array(p) for p in itertools.product(*axes)]
    if n_random:
        rng = np.random.default_rng(rng_seed)
        lo = np.array([iv[0] for iv in box])
        hi = np.array([iv[1] for iv in box])
        points += list(rng.uniform(lo, hi, size=(n_random, n)))
    values = [_c_at(fmap, p) for p in points]
    best = int(np.argmin(values))
    x_best, c_best = points[best].copy(), values[best]

    if refine:
        width = [(hi - lo) / (n_grid - 1) for lo, hi in box]
        for _ in range(sweeps):
            improved = False
            for i, (lo, hi) in enumerate(box):
                a = max(lo, x_best[i] - width[i])
                b = min(hi, x_best[i] + width[i])

                def along(s, i=i):
                    x = x_best.copy()
                    x[i] = s
                    return _c_at(fmap, x)

                s, c = _golden_section(along, a, b)
                if c < c_best:
                    x_best[i], c_best = s, c
                    improved = True
            if not improved:
                break
        c_best = _c_at(fmap, x_best)

    return HadamardEstimate(float(c_best), x_best, box, len(points), bool(refine))


def lipschitz_probe(fmap, c_hat, n_pairs, box, rng_seed=0, extra_pairs=()):
    """Look for pairs with ``|f(x) - f(y)| < sqrt(c_hat) |x - y|``.

    Under the Hadamard condition with constant c no such pair exists.
    ``extra_pairs`` are checked in addition to the random ones.
    """
    if c_hat < 0:
        raise ValueError("c_hat must be non-negative")
    n = fmap.dim
    box = _normalize_box(box, n)
    rng = np.random.default_rng(rng_seed)
    lo = np.array([iv[0] for iv in box])
    hi = np.array([iv[1] for iv in box])
    pairs = [(rng.uniform(lo, hi), rng.uniform(lo, hi)) for _ in range(n_pairs)]
    pairs += [(as_vector(x, n), as_vector(y, n)) for x, y in extra_pairs]
    root_c = math.sqrt(c_hat)
    violations = []
    min_ratio = math.inf
    for x, y in pairs:
        dx = float(np.linalg.norm(x - y))
        if dx == 0.0:
            continue
        df = float(np.linalg.norm(evaluate(fmap, x) - evaluate(fmap, y)))
        min_ratio = min(min_ratio, df / dx)
        if df < root_c * dx * (1 - 1e-9):
            violations.append({
                "x": _vec(x),
                "y": _vec(y),
                "image_distance": df,
                "distance": dx,
                "bound": root_c * dx,
            })
    return LipschitzProbe(float(c_hat), len(pairs), min_ratio, violations)
