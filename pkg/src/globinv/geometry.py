"""Pullback metric of a map, its Christoffel symbols, and geodesics.

For f: R^n -> R^n with Jacobian J the pullback metric is G = J^T J.
With it f becomes a local isometry onto Euclidean space, so geodesics
of G are exactly the curves whose image under f is a straight line
traversed at constant speed.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobian
from .maps import evaluate, jacobian, second_derivative
from .numerics import OdeProblem, as_vector, integrate_adaptive, sigma_min, solve_linear

SIGMA_MIN_FLOOR = 1e-8


@dataclass(frozen=True)
class MetricTensor:
    G: np.ndarray
    base_point: np.ndarray

    def inner(self, u, v):
        return float(np.asarray(u) @ self.G @ np.asarray(v))


@dataclass(frozen=True)
class ChristoffelTensor:
    gamma: np.ndarray  # gamma[k, i, j]


@dataclass(frozen=True)
class GeodesicState:
    position: np.ndarray
    velocity: np.ndarray

    def as_array(self):
        return np.concatenate([self.position, self.velocity])

    @classmethod
    def from_array(cls, y):
        n = y.size // 2
        return cls(y[:n], y[n:])


@dataclass
class GeodesicTrace:
    """Accepted integration steps of a curve.

    ``images`` holds f at every recorded position and ``speeds`` holds
    |J(position) velocity|.
    """

    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    speeds: np.ndarray
    images: np.ndarray

    @property
    def final_position(self):
        return self.positions[-1]

    @property
    def steps(self):
        return len(self.t) - 1

    def speed_drift(self):
        """Largest relative departure of the speed from its initial value."""
        s0 = self.speeds[0]
        if s0 == 0.0:
            return float(np.max(np.abs(self.speeds)))
        return float(np.max(np.abs(self.speeds - s0)) / s0)

    def to_dict(self):
        return {
            "t": self.t.tolist(),
            "position": self.positions.tolist(),
            "velocity": self.velocities.tolist(),
            "speed": self.speeds.tolist(),
            "image": self.images.tolist(),
        }

    def to_csv(self):
        n = self.positions.shape[1]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["t"]
            + [f"pos_{i}" for i in range(1, n + 1)]
            + [f"vel_{i}" for i in range(1, n + 1)]
            + ["speed"]
            + [f"image_{i}" for i in range(1, n + 1)]
        )
        for t, x, v, s, fx in zip(self.t, self.positions, self.velocities, self.speeds, self.images):
            writer.writerow([repr(float(t))] + [repr(float(c)) for c in (*x, *v, s, *fx)])
        return buf.getvalue()

    @classmethod
    def from_samples(cls, fmap, ts, positions, velocities):
        positions = np.asarray(positions, dtype=float)
        velocities = np.asarray(velocities, dtype=float)
        speeds = np.array(
            [np.linalg.norm(jacobian(fmap, x) @ v) for x, v in zip(positions, velocities)]
        )
        images = np.array([evaluate(fmap, x) for x in positions])
        return cls(np.asarray(ts, dtype=float), positions, velocities, speeds, images)


def metric_tensor(fmap, x):
    x = as_vector(x, fmap.dim)
    j = jacobian(fmap, x)
    return MetricTensor(j.T @ j, x)


def _inverse_jacobian(j, x):
    """J^{-1}, refusing points where sigma_min(J) < SIGMA_MIN_FLOOR."""
    inv = solve_linear(j, np.eye(j.shape[0]))
    # 1/|J^{-1}|_F <= sigma_min; only pay for the exact value near the floor
    if 1.0 / np.linalg.norm(inv) < SIGMA_MIN_FLOOR and sigma_min(j) < SIGMA_MIN_FLOOR:
        raise SingularJacobian(f"sigma_min(Df) below {SIGMA_MIN_FLOOR:g}", position=np.array(x))
    return inv


def christoffel_pushforward(fmap, x):
    """Gamma^k_ij = sum_a (J^{-1})[k, a] H[a, i, j].

    Follows from differentiating (f o gamma)'' = 0 along a geodesic.
    Symmetric in (i, j) exactly because H is.
    """
    x = as_vector(x, fmap.dim)
    inv = _inverse_jacobian(jacobian(fmap, x), x)
    return ChristoffelTensor(np.einsum("ka,aij->kij", inv, second_derivative(fmap, x)))


def christoffel_metric(fmap, x):
    """Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), from analytic H."""
    x = as_vector(x, fmap.dim)
    j = jacobian(fmap, x)
    h = second_derivative(fmap, x)
    _inverse_jacobian(j, x)
    g = j.T @ j
    # dg[m, i, j] = d_m g_ij
    dg = np.einsum("ami,aj->mij", h, j) + np.einsum("ai,amj->mij", j, h)
    lower = 0.5 * (
        np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    )  # lower[l, i, j] = Gamma_{l ij}
    n = fmap.dim
    gamma = solve_linear(g, lower.reshape(n, n * n)).reshape(n, n, n)
    return ChristoffelTensor(gamma)


def geodesic_rhs(fmap, state):
    """Derivative of (position, velocity) under the geodesic equation."""
    gamma = christoffel_pushforward(fmap, state.position).gamma
    v = state.velocity
    return GeodesicState(v.copy(), -np.einsum("kij,i,j->k", gamma, v, v))


def speed(fmap, state):
    return float(np.linalg.norm(jacobian(fmap, state.position) @ state.velocity))


def exp_map(fmap, p, u, t_end=1.0, rtol=1e-10, atol=1e-12, max_steps=100_000, state_bound=1e8):
    """Integrate the geodesic from ``p`` with initial velocity ``u`` over [0, t_end].

    The final position of the returned trace is exp_p(t_end * u).
    """
    n = fmap.dim
    p = as_vector(p, n)
    u = as_vector(u, n)
    _inverse_jacobian(jacobian(fmap, p), p)
    if not np.any(u):
        return GeodesicTrace.from_samples(fmap, [0.0, t_end], [p, p], [u, u])

    def rhs(t, y):
        d = geodesic_rhs(fmap, GeodesicState(y[:n], y[n:]))
        return np.concatenate([d.position, d.velocity])

    problem = OdeProblem(rhs, 0.0, float(t_end), np.concatenate([p, u]), rtol, atol,
                         max_steps, state_bound)
    steps = integrate_adaptive(problem)
    ts = [t for t, _ in steps]
    ys = np.array([y for _, y in steps])
    return GeodesicTrace.from_samples(fmap, ts, ys[:, :n], ys[:, n:])
