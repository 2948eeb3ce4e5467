"""
Complex powers by a vertical contour
====================================

(-X)^{-z} is the contour integral of lambda^{-z} (lambda + X)^{-1} along a
line left of the spectrum of -X0.  Beyond the truncation height the
resolvent's Laurent series is integrated in closed form.
"""
# %%
import numpy as np

from reschern.geometry import get_builtin
from reschern.holocalc import PowerEvaluator, complex_power
from reschern.oracles import binomial_power
from reschern.superalgebra import wedge
from reschern.superconnection import curvature

s = get_builtin("S1_WINDING")
rho = 1.3
d = curvature(s, np.array([0.8]), rho, np.array([1.0]))

# %%
# Non-positive integers take the exact algebra path.
print("z=-1:", (complex_power(d, -1) - (-d.total())).max_abs())

# %%
# Scalar degree-0 part: compare with the terminating binomial series.
for z in (0.5, 1.5 + 2j):
    err = (complex_power(d, z) - binomial_power(rho ** 2, d.nilpotent(), z)).max_abs()
    print(f"z={z}: binomial oracle error {err:.1e}")

# %%
# One evaluator, many z: the semigroup law.
mixed = get_builtin("S1_MIXED")
pw = PowerEvaluator(curvature(mixed, np.array([0.8]), rho, np.array([1.0])))
a, b = 0.4 + 0.3j, 1.1
print("semigroup:", (wedge(pw(a), pw(b)) - pw(a + b)).max_abs())
print("contour:", pw.contour, "tail size at z=1:", pw.tail_estimate(1.0))
