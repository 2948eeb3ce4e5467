"""
Curvature and the Chern character pairing
=========================================

A scenario fixes the symbol L, the connection and the test form eta.
The curvature of nabla + L splits into homogeneous pieces in rho.
"""
# %%
import numpy as np

from reschern.geometry import builtin_scenarios, get_builtin
from reschern.superconnection import chern_form, curvature, lhs_pairing

for name, s in builtin_scenarios().items():
    print(f"{name:14s} n={s.n} rank {s.p}|{s.q} kappa={s.kappa} s_min={s.s_min:.3f}")

# %%
s = get_builtin("S1_WINDING")
d = curvature(s, np.array([0.3]), 1.5, np.array([1.0]))
print("L^2 =", np.round(d.lsq.degree0(), 12))     # -rho^2 I for the winding symbol
print("pieces with support:", {k: sorted(v.support) for k, v in d.letters().items()})

# %%
# The top coefficient of str exp(curvature), integrated against eta.
ch = chern_form(s, np.array([0.3]), 1.5, np.array([1.0]))
print("chern form blades:", np.round(ch, 8))
print("pairing S1_WINDING  :", lhs_pairing(s))
print("pairing S1_WINDING_2:", lhs_pairing(get_builtin("S1_WINDING_2")))   # twice the above
