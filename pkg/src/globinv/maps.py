"""C^2 smooth maps R^n -> R^n with exact first and second derivatives.

A :class:`SmoothMap` bundles the value, the Jacobian ``J[a, i] = df_a/dx_i``
and the second-derivative tensor ``H[a, i, j] = d2 f_a / dx_i dx_j``.
Indices are 0-based throughout the code.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch
from .numerics import as_vector

BUILTIN_NAMES = ("identity", "linear", "sinperturb", "cyclosin", "shear2", "expc")


@dataclass(frozen=True)
class SmoothMap:
    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    second_derivative: Callable[[np.ndarray], np.ndarray]
    name: str = "map"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.second_derivative is None:
            raise TypeError("a SmoothMap needs second derivatives (C^2 contract)")
        if int(self.dim) < 1:
            raise DimensionMismatch("dim must be >= 1")

    def __call__(self, x):
        return self.eval(x)


def evaluate(fmap, x):
    return np.asarray(fmap.eval(as_vector(x, fmap.dim)), dtype=float)


def jacobian(fmap, x):
    return np.asarray(fmap.jacobian(as_vector(x, fmap.dim)), dtype=float)


def second_derivative(fmap, x):
    return np.asarray(fmap.second_derivative(as_vector(x, fmap.dim)), dtype=float)


def default_linear_matrix(n):
    """Upper bidiagonal matrix; equals [[2, 1], [0, 1]] for n = 2."""
    a = np.eye(n) + np.eye(n, k=1)
    a[0, 0] = 2.0
    return a


def _identity(n):
    return SmoothMap(
        n,
        lambda x: np.array(x, dtype=float),
        lambda x: np.eye(n),
        lambda x: np.zeros((n, n, n)),
        name="identity",
    )


def _linear(n, a=None, b=None):
    a = default_linear_matrix(n) if a is None else np.array(a, dtype=float)
    b = np.zeros(n) if b is None else as_vector(b, n)
    if a.shape != (n, n):
        raise DimensionMismatch(f"linear map needs a {n}x{n} matrix, got {a.shape}")
    if np.linalg.matrix_rank(a) < n:
        raise ValueError("linear map needs an invertible matrix")
    a.setflags(write=False)
    b.setflags(write=False)
    return SmoothMap(
        n,
        lambda x: a @ x + b,
        lambda x: a.copy(),
        lambda x: np.zeros((n, n, n)),
        name="linear",
        params={"A": a.tolist(), "b": b.tolist()},
    )


def _sinperturb(n, alpha=0.5):
    idx = np.arange(n)

    def hess(x):
        h = np.zeros((n, n, n))
        h[idx, idx, idx] = -alpha * np.sin(x)
        return h

    return SmoothMap(
        n,
        lambda x: x + alpha * np.sin(x),
        lambda x: np.diag(1.0 + alpha * np.cos(x)),
        hess,
        name="sinperturb",
        params={"alpha": alpha},
    )


def _cyclosin(n, alpha=0.4):
    idx = np.arange(n)
    nxt = (idx + 1) % n  # f_i depends on x_{i+1}, cyclically

    def jac(x):
        j = np.eye(n)
        j[idx, nxt] += alpha * np.cos(x[nxt])
        return j

    def hess(x):
        h = np.zeros((n, n, n))
        h[idx, nxt, nxt] = -alpha * np.sin(x[nxt])
        return h

    return SmoothMap(
        n,
        lambda x: x + alpha * np.sin(x[nxt]),
        jac,
        hess,
        name="cyclosin",
        params={"alpha": alpha},
    )


def _shear2():
    def hess(x):
        h = np.zeros((2, 2, 2))
        h[1, 0, 0] = 2.0
        return h

    return SmoothMap(
        2,
        lambda x: np.array([x[0], x[1] + x[0] ** 2]),
        lambda x: np.array([[1.0, 0.0], [2.0 * x[0], 1.0]]),
        hess,
        name="shear2",
    )


def _expc():
    def value(x):
        r = np.exp(x[0])
        return np.array([r * np.cos(x[1]), r * np.sin(x[1])])

    def jac(x):
        r = np.exp(x[0])
        c, s = np.cos(x[1]), np.sin(x[1])
        return r * np.array([[c, -s], [s, c]])

    def hess(x):
        r = np.exp(x[0])
        c, s = r * np.cos(x[1]), r * np.sin(x[1])
        return np.array([[[c, -s], [-s, -c]], [[s, c], [c, -s]]])

    return SmoothMap(2, value, jac, hess, name="expc")


def make_builtin(name, n=2, alpha=None, a=None, b=None):
    """Build one of the corpus maps.

    ``name`` may carry a parameter after a colon, e.g. ``"sinperturb:0.3"``.
    """
    if ":" in name:
        name, arg = name.split(":", 1)
        alpha = float(arg)
    if name not in BUILTIN_NAMES:
        raise ValueError(f"unknown builtin map {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    n = int(n)
    if n < 1:
        raise DimensionMismatch("dimension must be >= 1")
    if name in ("shear2", "expc") and n != 2:
        raise DimensionMismatch(f"{name} is only defined for n = 2, got n = {n}")
    if name in ("sinperturb", "cyclosin"):
        alpha = {"sinperturb": 0.5, "cyclosin": 0.4}[name] if alpha is None else float(alpha)
        if not abs(alpha) < 1:
            raise ValueError(f"{name} needs |alpha| < 1, got {alpha}")
        return (_sinperturb if name == "sinperturb" else _cyclosin)(n, alpha)
    if alpha is not None:
        raise ValueError(f"{name} takes no parameter")
    if name == "identity":
        return _identity(n)
    if name == "linear":
        return _linear(n, a, b)
    if name == "shear2":
        return _shear2()
    return _expc()


def fd_check(fmap, x, h=1e-5):
    """Compare analytic derivatives with central differences of ``eval``.

    Returns ``(jac_error, hess_error)`` as max-norm discrepancies.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = as_vector(x, fmap.dim)
    n = fmap.dim
    f = fmap.eval
    eye = np.eye(n) * h

    jac_fd = np.empty((n, n))
    for i in range(n):
        jac_fd[:, i] = (f(x + eye[i]) - f(x - eye[i])) / (2 * h)

    hess_fd = np.empty((n, n, n))
    for i in range(n):
        for j in range(i, n):
            d = (
                f(x + eye[i] + eye[j])
                - f(x + eye[i] - eye[j])
                - f(x - eye[i] + eye[j])
                + f(x - eye[i] - eye[j])
            ) / (4 * h * h)
            hess_fd[:, i, j] = hess_fd[:, j, i] = d

    jac_error = float(np.max(np.abs(jac_fd - jacobian(fmap, x))))
    hess_error = float(np.max(np.abs(hess_fd - second_derivative(fmap, x))))
    return jac_error, hess_error
