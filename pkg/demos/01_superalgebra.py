"""
Mixed forms with super-matrix coefficients
==========================================

Forms on the 2n-dimensional total space T*M carry matrices on a graded
space C^{p|q}.  Blades are bitmasks over the generators
(d rho, dXi..., dx...).
"""
# %%
import numpy as np

from reschern.oracles import dense_exp, dense_wedge, random_form
from reschern.superalgebra import (MixedForm, blade, exp_form, generator_labels,
                                   supertrace_form, wedge)

print(generator_labels(1))          # ['drho', 'dx1'] for n = 1

# %%
# The super sign: an odd matrix moving past an odd form picks up a minus.
odd = np.array([[0, 1], [1, 0]], complex)
a = MixedForm.from_components(1, 1, 1, {0: odd})
b = MixedForm.from_components(1, 1, 1, {blade(0): np.eye(2), blade(1): odd})
print(wedge(a, b).component(blade(0)))

# %%
# Products agree with the dense left-regular representation.
rng = np.random.default_rng(0)
x, y = random_form(rng, 2, 2, 1), random_form(rng, 2, 2, 1)
print("wedge vs dense:", (wedge(x, y) - dense_wedge(x, y)).max_abs())

# %%
# exp of a form: the degree-0 part is a matrix exponential and the
# nilpotent remainder terminates after 2n steps.
z = random_form(rng, 2, 2, 1, scale=0.3)
print("exp vs dense:", (exp_form(z) - dense_exp(z)).max_abs())
print("supertraced blades:", np.round(supertrace_form(exp_form(z))[:4], 6))
