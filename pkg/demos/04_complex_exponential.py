"""
When the hypothesis fails: the complex exponential
==================================================

``exp(z)`` in real coordinates has an invertible Jacobian everywhere, yet it
is neither injective (it is 2 pi i periodic) nor surjective (0 is never
attained). The missing ingredient is the bound on ``|Df^{-1}| = exp(-x1)``.
"""

import math

from globinv import estimate_hadamard, invert, lipschitz_probe, make_builtin

expc = make_builtin("expc")

for r in (1, 2, 3, 5):
    c = estimate_hadamard(expc, [(-r, r), (-math.pi, math.pi)], n_grid=41).c_hat
    print(f"x1 in [-{r}, {r}]: c_hat = {c:.3e}  (exp(-2R) = {math.exp(-2 * r):.3e})")

###############################################################################
# Asking for a preimage of 0 sends the continuation path off to
# x1 = -infinity. The solver reports the divergence instead of a fake answer.

report = invert(expc, (0.0, 0.0))
print(report.failure.kind, "at t =", report.failure.t, "x =", report.failure.position)

###############################################################################
# For y = -1 the straight segment from f(0) = 1 passes through the origin
# at t = 1/2, so the path breaks there.

report = invert(expc, (-1.0, 0.0))
print(report.failure.kind, "at t =", round(report.failure.t, 6))

###############################################################################
# Off the bad segment the construction works fine: invertibility of Df is
# enough locally.

report = invert(expc, (-1.0, 0.5))
print("preimage of (-1, 0.5):", report.solution, "residual", report.residual)

###############################################################################
# Periodicity shows up as a violated lower-Lipschitz bound.

probe = lipschitz_probe(expc, math.exp(-2), 0, [(-1, 1), (-4, 4)],
                        extra_pairs=[((0.0, 0.0), (0.0, 2 * math.pi))])
print(probe.violations[0])
