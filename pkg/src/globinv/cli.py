"""Command-line front end.

Exit codes: 0 success, 1 selftest failure, 2 usage error, 3 solver
failure (the failure report is still written), 4 map parse/domain error.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import expr
from .errors import DimensionMismatch, DomainError, ParseError, SolverFailure
from .geometry import exp_map
from .maps import BUILTIN_NAMES, evaluate, jacobian, make_builtin
from .numerics import sigma_min
from .solver import (
    METHODS,
    InversionOptions,
    estimate_hadamard,
    invert,
    invert_geodesic,
    invert_many,
    lipschitz_probe,
)

EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, EXIT_SOLVER, EXIT_PARSE = 0, 1, 2, 3, 4

# flags whose values may legitimately start with "-"
_VALUE_FLAGS = ("--target", "--x0", "--box", "--velocity", "--pair")


class UsageError(Exception):
    pass


def parse_vector(text):
    try:
        values = [float(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot read {text!r} as comma-separated numbers") from None
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"non-finite entry in {text!r}")
    return np.array(values)


def parse_box(text):
    box = []
    for part in text.split(","):
        try:
            lo, hi = (float(s) for s in part.split(":"))
        except ValueError:
            raise UsageError(f"box interval {part!r} is not lo:hi") from None
        if not lo < hi:
            raise UsageError(f"box interval {part!r} is empty")
        box.append((lo, hi))
    return box


def resolve_map(spec, dim=None):
    """Builtin name (``sinperturb:0.3``) or ``@path`` to a map file."""
    if spec.startswith("@"):
        fmap = expr.load_map_file(spec[1:])
        if dim is not None and dim != fmap.dim:
            raise DimensionMismatch(f"map file has dim {fmap.dim}, arguments have {dim}")
        return fmap
    base = spec.split(":", 1)[0]
    if base not in BUILTIN_NAMES:
        raise UsageError(f"unknown map {spec!r}; builtins are {', '.join(BUILTIN_NAMES)}")
    if dim is None:
        dim = 2
    try:
        return make_builtin(spec, dim)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _join_value_flags(argv):
    out = []
    it = iter(argv)
    for arg in it:
        if arg in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(arg if nxt is None else f"{arg}={nxt}")
        else:
            out.append(arg)
    return out


def _add_solver_flags(p):
    p.add_argument("--x0", help="seed point x0 (default: origin)")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--polish-tol", type=float, default=1e-10)
    p.add_argument("--max-polish-iters", type=int, default=20)
    p.add_argument("--state-bound", type=float, default=1e8)
    p.add_argument("--max-steps", type=int, default=100_000)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="globinv", description="Global inverses of smooth maps by geodesic continuation."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", help="solve f(x) = target")
    p.add_argument("--map", required=True)
    p.add_argument("--target", action="append", required=True,
                   help="comma-separated target; repeat for a batch")
    _add_solver_flags(p)
    p.add_argument("--out", help="JSON output path (default: stdout)")
    p.add_argument("--trace", help="write the path of the first target as CSV")
    p.add_argument("--no-trace-json", action="store_true", help="omit the trace from JSON")

    p = sub.add_parser("trace", help="integrate a geodesic and write it as CSV")
    p.add_argument("--map", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--target", help="shoot toward f(x) = target")
    group.add_argument("--velocity", help="initial velocity u; traces exp_x0(t u)")
    p.add_argument("--t-end", type=float, default=1.0)
    _add_solver_flags(p)
    p.add_argument("--out", help="CSV output path (default: stdout)")

    p = sub.add_parser("estimate", help="estimate the Hadamard constant over a box")
    p.add_argument("--map", required=True)
    p.add_argument("--box", required=True, action="append", help="lo:hi[,lo:hi...]; may repeat")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("probe", help="search for lower-Lipschitz violations")
    p.add_argument("--map", required=True)
    p.add_argument("--box", required=True, action="append", help="lo:hi[,lo:hi...]; may repeat")
    p.add_argument("--random", type=int, default=1000, help="number of random pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=21, help="grid for estimating c_hat")
    p.add_argument("--c-hat", type=float, help="use this constant instead of estimating it")
    p.add_argument("--pair", action="append", default=[], help="extra pair x/y, e.g. 0,0/0,6.28")
    p.add_argument("--out")

    sub.add_parser("demo-exp", help="walk through the complex exponential counterexample")
    sub.add_parser("selftest", help="run the invariant suites")
    return parser


def _emit(text, path, stdout):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _dump(obj):
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _options(args, n):
    x0 = None if args.x0 is None else tuple(parse_vector(args.x0))
    if x0 is not None and len(x0) != n:
        raise UsageError(f"--x0 has {len(x0)} entries, map dimension is {n}")
    try:
        return InversionOptions(
            method=args.method, rtol=args.rtol, atol=args.atol, polish_tol=args.polish_tol,
            max_polish_iters=args.max_polish_iters, state_bound=args.state_bound,
            max_steps=args.max_steps, x0=x0,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _check_dim(fmap, vec, flag):
    if vec.size != fmap.dim:
        raise UsageError(f"{flag} has {vec.size} entries, map dimension is {fmap.dim}")


def cmd_invert(args, stdout):
    targets = [parse_vector(t) for t in args.target]
    if len({t.size for t in targets}) != 1:
        raise UsageError("all --target values must have the same length")
    fmap = resolve_map(args.map, targets[0].size)
    for t in targets:
        _check_dim(fmap, t, "--target")
    opts = _options(args, fmap.dim)
    reports = invert_many(fmap, targets, opts)
    include = not args.no_trace_json
    docs = [r.to_dict(include_trace=include) for r in reports]
    _emit(_dump(docs[0] if len(docs) == 1 else docs), args.out, stdout)
    if args.trace and reports[0].trace is not None:
        _emit(reports[0].trace.to_csv(), args.trace, stdout)
    for r in reports:
        if r.failure is not None:
            print(f"globinv: {r.failure.kind}: {r.failure.message}", file=sys.stderr)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_SOLVER


def cmd_trace(args, stdout):
    vec = parse_vector(args.target if args.target is not None else args.velocity)
    fmap = resolve_map(args.map, vec.size)
    _check_dim(fmap, vec, "--target" if args.target is not None else "--velocity")
    opts = _options(args, fmap.dim)
    if args.target is not None:
        report = invert_geodesic(fmap, vec, opts)
        if report.trace is not None:
            _emit(report.trace.to_csv(), args.out, stdout)
        if report.failure is not None:
            print(f"globinv: {report.failure.kind}: {report.failure.message}", file=sys.stderr)
            return EXIT_SOLVER
        return EXIT_OK
    x0 = opts.seed_point(fmap.dim)
    try:
        trace = exp_map(fmap, x0, vec, args.t_end, opts.rtol, opts.atol, opts.max_steps,
                        opts.state_bound)
    except SolverFailure as exc:
        print(f"globinv: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(trace.to_csv(), args.out, stdout)
    return EXIT_OK


def cmd_estimate(args, stdout):
    box = parse_box(",".join(args.box))
    fmap = resolve_map(args.map, len(box))
    if len(box) != fmap.dim:
        raise UsageError(f"--box has {len(box)} intervals, map dimension is {fmap.dim}")
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    est = estimate_hadamard(fmap, box, args.grid, args.random, args.refine, args.seed)
    _emit(_dump(est.to_dict()), args.out, stdout)
    return EXIT_OK


def cmd_probe(args, stdout):
    box = parse_box(",".join(args.box))
    fmap = resolve_map(args.map, len(box))
    if len(box) != fmap.dim:
        raise UsageError(f"--box has {len(box)} intervals, map dimension is {fmap.dim}")
    pairs = []
    for text in args.pair:
        if "/" not in text:
            raise UsageError(f"--pair {text!r} is not x/y")
        x, y = (parse_vector(s) for s in text.split("/", 1))
        _check_dim(fmap, x, "--pair")
        _check_dim(fmap, y, "--pair")
        pairs.append((x, y))
    c_hat = args.c_hat
    if c_hat is None:
        c_hat = estimate_hadamard(fmap, box, args.grid, 0, True, args.seed).c_hat
    probe = lipschitz_probe(fmap, c_hat, args.random, box, args.seed, pairs)
    _emit(_dump(probe.to_dict()), args.out, stdout)
    return EXIT_OK


def demo_exp(stdout=None):
    """Narrate why the complex exponential escapes the global inverse theorem."""
    out = stdout or sys.stdout
    fmap = make_builtin("expc")

    def section(title):
        out.write(f"\n== {title} ==\n")

    out.write("f(x1, x2) = (exp(x1) cos x2, exp(x1) sin x2): Df is invertible everywhere,\n"
              "but |Df^{-1}| = exp(-x1) is unbounded, and f is neither injective nor surjective.\n")

    section("Jacobian at sample points")
    for x in [(0.0, 0.0), (1.0, 0.0), (-1.0, math.pi / 2)]:
        j = jacobian(fmap, x)
        out.write(f"x = {x}: Df = {np.array2string(j, precision=6)}; det = {np.linalg.det(j):.6g}\n")

    section("sigma_min at x1=-1")
    for x2 in (0.0, 1.0, 2.5):
        s = sigma_min(jacobian(fmap, (-1.0, x2)))
        out.write(f"x = (-1, {x2}): sigma_min(Df) = {s:.12f}  (exp(-1) = {math.exp(-1):.12f})\n")

    section("c_hat decay")
    for r in (1, 2, 3, 4):
        est = estimate_hadamard(fmap, [(-r, r), (-math.pi, math.pi)], n_grid=41)
        out.write(f"box x1 in [-{r}, {r}]: c_hat = {est.c_hat:.6e}, exp(-2R) = {math.exp(-2 * r):.6e}\n")
    out.write("c_hat -> 0 as the box grows: the boundedness hypothesis fails.\n")

    section("invert (0,0)")
    report = invert(fmap, (0.0, 0.0))
    if report.failure is None:
        out.write("unexpected success\n")
    else:
        out.write(f"failure: {report.failure.kind} at t = {report.failure.t:.10f}, "
                  f"x1 = {report.solution[0]:.3f}\n")
        out.write("the continuation path runs off to x1 = -infinity: 0 is not in the image.\n")

    section("periodicity")
    a, b = (0.0, 0.0), (0.0, 2 * math.pi)
    gap = float(np.linalg.norm(evaluate(fmap, a) - evaluate(fmap, b)))
    out.write(f"|f(0,0) - f(0,2pi)| = {gap:.3e}  (<= 1e-12: {gap <= 1e-12})\n")
    est = estimate_hadamard(fmap, [(-1, 1), (-math.pi, math.pi)], n_grid=41)
    probe = lipschitz_probe(fmap, est.c_hat, 0, [(-1, 1), (-math.pi, math.pi)], 0, [(a, b)])
    out.write(f"lower-Lipschitz violations for the pair (0,0)/(0,2pi): {len(probe.violations)}\n")
    out.write("f is not injective.\n")
    return EXIT_OK


_COMMANDS = {
    "invert": cmd_invert,
    "trace": cmd_trace,
    "estimate": cmd_estimate,
    "probe": cmd_probe,
}


def run(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_value_flags(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "demo-exp":
        return demo_exp(stdout)
    if args.command == "selftest":
        from .selftest import run_selftest
        return EXIT_OK if run_selftest(stdout) else EXIT_SELFTEST
    try:
        return _COMMANDS[args.command](args, stdout)
    except (UsageError, DimensionMismatch) as exc:
        print(f"globinv: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, DomainError) as exc:
        print(f"globinv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"globinv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"globinv: {exc.kind}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main():
    sys.exit(run())
