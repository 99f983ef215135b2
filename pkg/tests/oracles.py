"""Independent reference computations used only by the tests."""

import math

import numpy as np


def charpoly(m):
    """Coefficients of det(lambda I - m), highest degree first (Faddeev-LeVerrier)."""
    n = m.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(m)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(m @ mk) / k)
    return coeffs


def smallest_eig_bisection(m, grid=20000):
    """Smallest root of the characteristic polynomial of an SPD matrix."""
    c = charpoly(m)

    def p(lam):
        return sum(ck * lam ** (len(c) - 1 - i) for i, ck in enumerate(c))

    hi = float(np.trace(m))
    xs = np.linspace(0.0, hi, grid)
    vals = [p(x) for x in xs]
    for i in range(grid - 1):
        if vals[i] == 0.0:
            return xs[i]
        if vals[i] * vals[i + 1] < 0:
            a, b = xs[i], xs[i + 1]
            fa = vals[i]
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = p(mid)
                if fm == 0.0 or b - a < 1e-300:
                    return mid
                if fa * fm < 0:
                    b = mid
                else:
                    a, fa = mid, fm
            return 0.5 * (a + b)
    raise RuntimeError("no root bracketed")


def operator_norm_power(b, iters=5000, seed=0):
    """|b|_2 by power iteration on b^T b."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=b.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = b.T @ (b @ v)
        lam_new = np.linalg.norm(w)
        v = w / lam_new
        if abs(lam_new - lam) <= 1e-16 * lam_new:
            break
        lam = lam_new
    return math.sqrt(lam_new)


def expm_taylor(a, terms=30):
    """Matrix exponential by scaling and squaring with a truncated Taylor series."""
    norm = np.max(np.sum(np.abs(a), axis=1))
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2 ** s
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def central_jacobian(f, x, h=1e-6):
    n = x.size
    cols = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.array(cols).T
