"""
Levy areas and non-commutative noise
====================================

With two or more noise sources the Milstein correction needs the iterated
integrals ``I[j, l]``.  Their symmetric part follows from the increments; the
antisymmetric part (the Levy area) must be sampled.  Dropping it costs half
an order when the noise does not commute.
"""

import numpy as np

from tamed_milstein import NoiseStream, StudyConfig, fit_rate, iterated_integrals, levy_area, make_builtin, strong_errors

# Conditional on dw = 0 the area over a step of length h has variance h^2 / 12
h = 1.0
areas = levy_area(np.zeros((50_000, 2)), h, K=200, stream=NoiseStream(1))[:, 0, 1]
print(f"Var(A | dw = 0) = {areas.var():.4f}   (exact {h**2 / 12:.4f})")

# The diagonal of I is fixed by the increments alone
dw = np.array([0.3, -0.2])
it = iterated_integrals(dw, 0.1, "levy-fourier", stream=NoiseStream(2))
print("I =\n", it)
print("diagonal (dw^2 - h) / 2 =", (dw**2 - 0.1) / 2)

# A two-dimensional model whose noise columns do not commute
model = make_builtin("superlinear-2d", sigma0=0.5)
kw = dict(n_list=[8, 16, 32, 64], n_ref=1024, M=1024, x0=[0.5, -0.5])
for mode in ("levy-fourier", "commutative"):
    fit = fit_rate(strong_errors(StudyConfig(model, iter_mode=mode, **kw)))
    print(f"{mode:>13}: order {fit.slope:.3f}")
