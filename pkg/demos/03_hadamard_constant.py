"""
Estimating the Hadamard constant
================================

The hypothesis of the global inverse function theorem is that
``|Df(x)^{-1}| = 1 / sigma_min(Df(x))`` is bounded, i.e. that
``c = inf sigma_min(Df)^2`` is positive. ``estimate_hadamard`` samples this
quantity over a box. It is a heuristic lower estimate over that box only.
"""

import math

from globinv import estimate_hadamard, lipschitz_probe, make_builtin

sp = make_builtin("sinperturb:0.5", 1)
est = estimate_hadamard(sp, [(-10, 10)], n_grid=2001)
print(f"sinperturb(0.5): c_hat = {est.c_hat:.6f} at x = {est.argmin[0]:.4f} (exact 0.25 at pi)")

est = estimate_hadamard(sp, [(-10, 10)], n_grid=21, refine=True)
print(f"coarse grid + golden-section refinement: c_hat = {est.c_hat:.10f}")

###############################################################################
# With c in hand, |f(x) - f(y)| >= sqrt(c) |x - y| for every pair. Sampling
# pairs is a cheap consistency check of the estimate.

cs = make_builtin("cyclosin", 3)
box = [(-10, 10)] * 3
est = estimate_hadamard(cs, box, n_grid=13, n_random=200, refine=True, rng_seed=1)
probe = lipschitz_probe(cs, est.c_hat, 1000, box, rng_seed=2)
print(f"cyclosin n=3: c_hat = {est.c_hat:.6f}, violations = {len(probe.violations)}, "
      f"smallest ratio |f(x)-f(y)|/|x-y| = {probe.min_ratio:.4f} >= sqrt(c) = {math.sqrt(est.c_hat):.4f}")

###############################################################################
# ``shear2`` is a diffeomorphism but fails the hypothesis: sigma_min(Df)
# shrinks like 1/|x1| as the box grows. The theorem's condition is
# sufficient, not necessary.

sh = make_builtin("shear2")
for r in (1, 10, 100):
    c = estimate_hadamard(sh, [(-r, r), (-r, r)], n_grid=21).c_hat
    print(f"shear2 box [-{r}, {r}]^2: c_hat = {c:.3e}")
