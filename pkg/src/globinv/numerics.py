"""Small dense linear algebra and an adaptive Dormand-Prince integrator.

Everything here is sized for desk-scale problems (n <= 16).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lapack

from .errors import (
    DimensionMismatch,
    MaxStepsExceeded,
    PathDiverged,
    SingularJacobian,
    SolverFailure,
)

EPS = np.finfo(float).eps
RCOND_MIN = 1e-12
MAX_DIM = 16


def as_vector(x, n=None):
    """Return ``x`` as a finite 1-d float array, optionally of length ``n``."""
    v = np.array(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else np.array(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DimensionMismatch(f"expected a non-empty vector, got shape {v.shape}")
    if n is not None and v.size != n:
        raise DimensionMismatch(f"expected a vector of length {n}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector has non-finite entries: {v}")
    return v


def as_matrix(a, n=None):
    m = np.array(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise DimensionMismatch(f"expected a {n}x{n} matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def solve_linear(a, b):
    """Solve ``a @ x = b`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides. Raises
    SingularJacobian when the 1-norm reciprocal condition estimate falls
    below 1e-12.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, matrix is {a.shape[0]}x{a.shape[0]}")
    anorm = np.abs(a).sum(axis=0).max()
    lu, piv, info = lapack.dgetrf(a)
    if info > 0 or anorm == 0.0:
        raise SingularJacobian("matrix is exactly singular")
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if not rcond >= RCOND_MIN:
        raise SingularJacobian(f"reciprocal condition estimate {rcond:.3e} below {RCOND_MIN:g}")
    x, info = lapack.dgetrs(lu, piv, b)
    return x


def sigma_min(a):
    """Smallest singular value by one-sided Jacobi rotations.

    The column Gram entries (the entries of a.T @ a) drive each rotation;
    at convergence the columns are orthogonal and their norms are the
    singular values. Accurate to high relative precision for n <= 16.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[1]
    if n == 1:
        return abs(float(a[0, 0]))
    cols = a.T.tolist()
    for _ in range(60):
        rotated = False
        for p in range(n - 1):
            up = cols[p]
            for q in range(p + 1, n):
                uq = cols[q]
                alpha = sum(x * x for x in up)
                beta = sum(x * x for x in uq)
                gamma = sum(x * y for x, y in zip(up, uq))
                if abs(gamma) <= EPS * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                up, uq = (
                    [c * x - s * y for x, y in zip(up, uq)],
                    [s * x + c * y for x, y in zip(up, uq)],
                )
                cols[p], cols[q] = up, uq
        if not rotated:
            break
    return min(math.sqrt(sum(x * x for x in col)) for col in cols)


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [np.array(row) for row in [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_HAT = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B - _B_HAT


@dataclass(frozen=True)
class OdeProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    t0: float
    t1: float
    y0: np.ndarray
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 100_000
    state_bound: float = 1e8

    def __post_init__(self):
        object.__setattr__(self, "y0", as_vector(self.y0))
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.state_bound > np.linalg.norm(self.y0):
            raise ValueError("state_bound must exceed |y0|")


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def integrate_adaptive(problem):
    """Integrate ``problem`` with Dormand-Prince 5(4) and PI step control.

    Returns the accepted-step trace as a list of ``(t, state)`` pairs that
    starts at ``t0`` and ends exactly at ``t1``. A SolverFailure raised on
    the way carries the steps accepted so far in its ``steps`` attribute.
    """
    p = problem
    rhs = p.rhs

    def f(t, y):
        try:
            dy = np.asarray(rhs(t, y), dtype=float)
        except SolverFailure as exc:
            if exc.t is None:
                exc.t = float(t)
            if exc.position is None:
                exc.position = np.array(y)
            raise
        if not np.all(np.isfinite(dy)):
            raise PathDiverged("right-hand side became non-finite", t=float(t), position=np.array(y))
        return dy

    t, y = float(p.t0), p.y0.copy()
    trace = [(t, y.copy())]
    safety, fac_min, fac_max = 0.9, 0.2, 10.0
    beta = 0.04
    alpha = 0.2 - 0.75 * beta
    err_old = 1e-4
    rejected = False
    steps = 0

    try:
        k = np.empty((7, y.size))
        k[0] = f(t, y)
        h = _initial_step(f, t, y, k[0], p.rtol, p.atol, p.t1 - p.t0)
        while t < p.t1:
            if steps >= p.max_steps:
                raise MaxStepsExceeded(f"more than {p.max_steps} steps", t=t, position=y.copy())
            if h <= 16 * EPS * max(1.0, abs(t)):
                raise PathDiverged(f"step size underflow (h = {h:.3e})", t=t, position=y.copy())
            last = t + h >= p.t1
            if last:
                h = p.t1 - t
            for s in range(1, 7):
                k[s] = f(t + _C[s] * h, y + h * (_A[s] @ k[:s]))
            y_new = y + h * (_B @ k)
            err_vec = h * (_E @ k)
            scale = p.atol + p.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

            if err <= 1.0:
                steps += 1
                t = p.t1 if last else t + h
                y = y_new
                k[0] = k[6]
                trace.append((t, y.copy()))
                if np.linalg.norm(y) > p.state_bound:
                    raise PathDiverged(
                        f"state norm exceeded {p.state_bound:g}", t=t, position=y.copy()
                    )
                if err == 0.0:
                    fac = fac_max
                else:
                    fac = safety * err ** -alpha * err_old ** beta
                    fac = min(fac_max, max(fac_min, fac))
                if rejected:
                    fac = min(fac, 1.0)
                err_old = max(err, 1e-4)
                rejected = False
                h *= fac
            else:
                rejected = True
                h *= max(fac_min, safety * err ** -0.2)
    except SolverFailure as exc:
        exc.steps = trace
        raise
    return trace
