"""
Two routes to the same curve
============================

The geodesic of the pullback metric ``G = Df^T Df`` that starts at ``x0``
with velocity ``Df(x0)^{-1} (y - f(x0))`` is mapped by ``f`` onto the
straight segment from ``f(x0)`` to ``y``, traversed at constant speed.
Differentiating ``f(x(t)) = f(x0) + t (y - f(x0))`` once gives the
first-order continuation ODE; the geodesic equation is its second-order
form. Integrating both should give the same endpoint.
"""

import numpy as np

from globinv import invert_continuation, invert_geodesic, make_builtin
from globinv.maps import evaluate

fmap = make_builtin("shear2")
y = np.array([2.0, -1.0])

cont = invert_continuation(fmap, y)
geo = invert_geodesic(fmap, y)
print("continuation endpoint", cont.endpoint, "steps", cont.ode_steps)
print("geodesic endpoint    ", geo.endpoint, "steps", geo.ode_steps)
print("difference           ", np.linalg.norm(cont.endpoint - geo.endpoint))
print("closed form          ", [y[0], y[1] - y[0] ** 2])

###############################################################################
# Along the geodesic the pullback speed |Df(x) x'| is conserved and the image
# f(x(t)) stays on the segment.

trace = geo.trace
print("speed drift", trace.speed_drift())
segment = evaluate(fmap, np.zeros(2)) + np.outer(trace.t, y - evaluate(fmap, np.zeros(2)))
print("max distance of f(x(t)) from the segment", np.max(np.linalg.norm(trace.images - segment, axis=1)))

###############################################################################
# Traces export as CSV for plotting elsewhere.

with open("shear2_geodesic.csv", "w") as fh:
    fh.write(trace.to_csv())
print("wrote shear2_geodesic.csv with", len(trace.t), "rows")
