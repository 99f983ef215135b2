"""Reduced-size invariant suites behind ``globinv selftest``.

Suites look functions up through their modules at call time, so a test
can patch e.g. ``geometry.christoffel_pushforward`` and watch the
affected suites fail.
"""

import math
import sys
import time

import numpy as np
from scipy.linalg import expm

from . import expr, geometry, maps, numerics, solver
from .errors import DomainError, PathDiverged, SingularJacobian

CORPUS = [("identity", 2), ("linear", 2), ("sinperturb", 2), ("cyclosin", 3),
          ("shear2", 2), ("expc", 2)]
HADAMARD = ("identity", "linear", "sinperturb", "cyclosin")


class CheckFailed(AssertionError):
    pass


def check(cond, msg):
    if not cond:
        raise CheckFailed(msg)


def _rng(k):
    return np.random.default_rng(1000 + k)


def suite_solve_linear():
    x = numerics.solve_linear([[2.0, 1.0], [0.0, 1.0]], [5.0, 3.0])
    check(np.allclose(x, [1, 3], rtol=0, atol=1e-15), f"back substitution gave {x}")
    try:
        numerics.solve_linear([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
        check(False, "rank-deficient matrix accepted")
    except SingularJacobian:
        pass
    rng = _rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 9))
        a = rng.normal(size=(n, n)) + n * np.eye(n)
        b = rng.normal(size=n)
        r = np.linalg.norm(a @ numerics.solve_linear(a, b) - b)
        check(r <= 1e-10 * (1 + np.linalg.norm(b)), f"multiply-back residual {r:.2e}")


def suite_sigma_min():
    check(numerics.sigma_min(np.diag([3.0, 0.5])) == 0.5, "diag(3, 0.5)")
    rng = _rng(2)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        a = rng.normal(size=(n, n))
        q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        s = numerics.sigma_min(a)
        check(abs(numerics.sigma_min(q @ a) - s) <= 1e-10 * max(1.0, s), "rotation invariance")
        ref = math.sqrt(np.linalg.eigvalsh(a.T @ a)[0]) if s > 1e-3 else s
        check(abs(s - ref) <= 1e-8 * max(1.0, ref), f"sigma_min {s} vs {ref}")


def suite_integrator():
    tr = numerics.integrate_adaptive(numerics.OdeProblem(lambda t, y: y, 0.0, 1.0, [1.0]))
    check(abs(tr[-1][1][0] - math.e) <= 1e-8, "y' = y")
    check(tr[0][0] == 0.0 and tr[-1][0] == 1.0, "trace endpoints")
    rng = _rng(3)
    for _ in range(3):
        n = int(rng.integers(1, 5))
        a = rng.normal(size=(n, n)) - 2 * n * np.eye(n)
        y0 = rng.normal(size=n)
        tr = numerics.integrate_adaptive(numerics.OdeProblem(lambda t, y: a @ y, 0.0, 1.0, y0))
        err = np.linalg.norm(tr[-1][1] - expm(a) @ y0)
        check(err <= 1e-7, f"linear system error {err:.2e}")
    try:
        numerics.integrate_adaptive(
            numerics.OdeProblem(lambda t, y: y * y, 0.0, 2.0, [1.0], state_bound=1e6))
        check(False, "blow-up not detected")
    except PathDiverged:
        pass


def suite_corpus_derivatives():
    rng = _rng(4)
    for name, n in CORPUS:
        fmap = maps.make_builtin(name, n)
        for _ in range(10):
            x = rng.uniform(-5, 5, n)
            je, he = maps.fd_check(fmap, x, 1e-4)
            check(je <= 1e-6 and he <= 1e-4, f"{name}: fd mismatch {je:.1e}/{he:.1e}")
            h = maps.second_derivative(fmap, x)
            check(np.array_equal(h, np.swapaxes(h, 1, 2)), f"{name}: H not symmetric")


def suite_corpus_values():
    expc = maps.make_builtin("expc")
    check(np.allclose(maps.jacobian(expc, (1.0, 0.0)), math.e * np.eye(2), atol=1e-15), "expc J")
    shear = maps.make_builtin("shear2")
    check(np.array_equal(maps.jacobian(shear, (3.0, 7.0)), [[1, 0], [6, 1]]), "shear2 J")
    rng = _rng(5)
    for _ in range(10):
        x = rng.uniform(-5, 5, 2)
        s = numerics.sigma_min(maps.jacobian(expc, x))
        check(abs(s - math.exp(x[0])) <= 1e-10 * math.exp(x[0]), "expc sigma_min")


def suite_expr_parse():
    ast = expr.parse("dim 2\nf1 = exp(x1)*cos(x2)\nf2 = exp(x1)*sin(x2)")
    parsed = expr.to_smooth_map(ast)
    builtin = maps.make_builtin("expc")
    rng = _rng(6)
    for _ in range(10):
        x = rng.uniform(-2, 2, 2)
        for fn in (maps.evaluate, maps.jacobian, maps.second_derivative):
            check(np.max(np.abs(fn(parsed, x) - fn(builtin, x))) <= 1e-12, f"{fn.__name__}")
    try:
        expr.parse("dim 1\nf1 = x1 +")
        check(False, "malformed input accepted")
    except expr.ParseError as exc:
        check(exc.line == 2, "error line")


def suite_expr_roundtrip():
    rng = _rng(7)
    for _ in range(30):
        ast = expr.random_ast(rng, 3, 6)
        check(expr.parse_expr(expr.to_text(ast)) == ast, "print/parse round trip")


def suite_hyperdual():
    rng = _rng(8)
    checked = 0
    while checked < 15:
        ast = expr.random_ast(rng, 2, 5)
        fmap = expr.to_smooth_map(expr.MapAst(2, (ast, ast)))
        x = rng.uniform(-2, 2, 2)
        try:
            f, j, h = (fn(fmap, x) for fn in (maps.evaluate, maps.jacobian, maps.second_derivative))
            if max(np.max(np.abs(f)), np.max(np.abs(j)), np.max(np.abs(h))) > 1e4:
                continue
            je, _ = maps.fd_check(fmap, x, 1e-6)
        except DomainError:
            continue
        check(je <= 1e-6 * (1 + np.max(np.abs(j))), f"hyper-dual vs fd {je:.2e}")
        checked += 1


def suite_local_isometry():
    rng = _rng(9)
    for name, n in CORPUS:
        fmap = maps.make_builtin(name, n)
        for _ in range(5):
            x, u, v = (rng.uniform(-3, 3, n) for _ in range(3))
            g = geometry.metric_tensor(fmap, x)
            j = maps.jacobian(fmap, x)
            d = g.inner(u, v) - (j @ u) @ (j @ v)
            check(abs(d) <= 1e-12 * max(1.0, abs(g.inner(u, v))), f"{name}: g != f*h")


def suite_christoffel():
    rng = _rng(10)
    for name, n in CORPUS:
        fmap = maps.make_builtin(name, n)
        for _ in range(10):
            x = rng.uniform(-2, 2, n)
            a = geometry.christoffel_metric(fmap, x).gamma
            b = geometry.christoffel_pushforward(fmap, x).gamma
            check(np.max(np.abs(a - b)) <= 1e-9, f"{name}: formulas disagree")
    g = geometry.christoffel_pushforward(maps.make_builtin("shear2"), (0.3, -1.0)).gamma
    check(abs(g[1, 0, 0] - 2) <= 1e-10, "shear2 Gamma^2_11")
    g = geometry.christoffel_pushforward(maps.make_builtin("expc"), (0.0, 0.0)).gamma
    check(abs(g[0, 0, 0] - 1) <= 1e-10 and abs(g[0, 1, 1] + 1) <= 1e-10
          and abs(g[1, 0, 1] - 1) <= 1e-10, "expc Christoffel at origin")


def suite_geodesics():
    rng = _rng(11)
    for name, n in CORPUS:
        fmap = maps.make_builtin(name, n)
        p = rng.uniform(-1, 1, n)
        u = rng.uniform(-1, 1, n)
        trace = geometry.exp_map(fmap, p, u, 1.0)
        check(trace.speed_drift() <= 1e-6, f"{name}: speed drift {trace.speed_drift():.1e}")
        a = maps.evaluate(fmap, p)
        w = maps.jacobian(fmap, p) @ u
        dev = max(np.linalg.norm(fx - (a + t * w)) for t, fx in zip(trace.t, trace.images))
        check(dev <= 1e-6 * (1 + np.linalg.norm(w)), f"{name}: image not straight ({dev:.1e})")


def suite_round_trip():
    rng = _rng(12)
    for name in HADAMARD:
        for n in (1, 3):
            fmap = maps.make_builtin(name, n)
            for _ in range(3):
                xs = rng.uniform(-10, 10, n)
                rep = solver.invert(fmap, maps.evaluate(fmap, xs))
                check(rep.ok and rep.residual <= 1e-10, f"{name}: failed or residual")
                check(np.linalg.norm(rep.solution - xs) <= 1e-8, f"{name}: wrong preimage")


def suite_method_agreement():
    rng = _rng(13)
    for name in HADAMARD:
        fmap = maps.make_builtin(name, 2)
        for _ in range(2):
            y = maps.evaluate(fmap, rng.uniform(-10, 10, 2))
            a = solver.invert_continuation(fmap, y)
            b = solver.invert_geodesic(fmap, y)
            check(a.ok and b.ok, f"{name}: a route failed")
            check(np.linalg.norm(a.endpoint - b.endpoint) <= 1e-6, f"{name}: endpoints differ")


def suite_hadamard_estimate():
    expc = maps.make_builtin("expc")
    prev = math.inf
    for r in (1, 2, 3):
        c = solver.estimate_hadamard(expc, [(-r, r), (-math.pi, math.pi)], n_grid=21).c_hat
        check(abs(c / math.exp(-2 * r) - 1) <= 0.01, f"expc R={r}: c_hat {c}")
        check(c < prev, "c_hat not decreasing")
        prev = c
    sp = maps.make_builtin("sinperturb", 1)
    c = solver.estimate_hadamard(sp, [(-10, 10)], n_grid=2001).c_hat
    check(abs(c / 0.25 - 1) <= 0.01, f"sinperturb c_hat {c}")


def suite_lipschitz():
    fmap = maps.make_builtin("sinperturb", 2)
    probe = solver.lipschitz_probe(fmap, 0.25, 200, [(-10, 10)] * 2, rng_seed=3)
    check(not probe.violations, "sinperturb violation")
    expc = maps.make_builtin("expc")
    probe = solver.lipschitz_probe(expc, math.exp(-2), 0, [(-1, 1), (-3, 3)], 0,
                                   [((0.0, 0.0), (0.0, 2 * math.pi))])
    check(len(probe.violations) == 1, "expc periodic pair not flagged")


def suite_failure_honesty():
    rep = solver.invert(maps.make_builtin("expc"), (0.0, 0.0))
    check(rep.failure is not None and rep.failure.kind == "path_diverged", "expc (0,0) succeeded")
    check(rep.solution[0] < -10, "final x1 not far out")


SUITES = [
    ("solve_linear", suite_solve_linear),
    ("sigma_min", suite_sigma_min),
    ("integrator", suite_integrator),
    ("corpus_derivatives", suite_corpus_derivatives),
    ("corpus_values", suite_corpus_values),
    ("expr_parse", suite_expr_parse),
    ("expr_roundtrip", suite_expr_roundtrip),
    ("hyperdual", suite_hyperdual),
    ("local_isometry", suite_local_isometry),
    ("christoffel", suite_christoffel),
    ("geodesics", suite_geodesics),
    ("round_trip", suite_round_trip),
    ("method_agreement", suite_method_agreement),
    ("hadamard_estimate", suite_hadamard_estimate),
    ("lipschitz", suite_lipschitz),
    ("failure_honesty", suite_failure_honesty),
]


def run_selftest(out=None):
    """Run every suite, print a pass/fail table, return True iff all pass."""
    out = out or sys.stdout
    results = []
    for name, fn in SUITES:
        start = time.perf_counter()
        try:
            fn()
            status, detail = "PASS", ""
        except Exception as exc:  # a crash is a failure of that suite
            status, detail = "FAIL", f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        results.append(status == "PASS")
        out.write(f"{status}  {name:<20} {elapsed:6.2f}s  {detail}\n")
    out.write(f"{sum(results)}/{len(results)} suites passed\n")
    return all(results)
