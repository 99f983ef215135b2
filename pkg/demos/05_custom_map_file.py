"""
Defining a map in a text file
=============================

Maps can be written in a small expression language. Derivatives up to
second order come from hyper-dual arithmetic, so they are exact to
rounding, and the geodesic route works just as for the builtins.
"""

from pathlib import Path

import numpy as np

from globinv import estimate_hadamard, fd_check, invert, invert_geodesic, load_map_file

here = Path(__file__).parent
fmap = load_map_file(here / "maps" / "twisted.map")
print(fmap.params["source"])

x = np.array([0.4, -1.3])
print("Jacobian\n", fmap.jacobian(x))
print("finite-difference check (jacobian, hessian):", fd_check(fmap, x, 1e-4))

est = estimate_hadamard(fmap, [(-6, 6), (-6, 6)], n_grid=41, refine=True)
print(f"c_hat = {est.c_hat:.4f} > 0, so every target has a unique preimage")

y = np.array([3.0, -2.0])
a = invert(fmap, y)
b = invert_geodesic(fmap, y)
print("continuation:", a.solution, " geodesic:", b.solution)

###############################################################################
# The same file syntax reproduces the complex exponential.

expc = load_map_file(here / "maps" / "expc.map")
print(invert(expc, (0.0, 0.0)).failure.kind)
