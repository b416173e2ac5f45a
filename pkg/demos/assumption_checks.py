"""
Sampling the coefficient conditions
===================================

The convergence result rests on growth and monotonicity conditions on the
coefficients.  They can not be proven numerically, but sampling a box (and
larger copies of it) quickly exposes constants that do not exist.
"""

import math

from tamed_milstein import ModelDomain, check_all, make_builtin

box = ModelDomain.cube(-3, 3, 1)

# sigma0^2 = 2/13 is the largest noise level for which the example satisfies
# the moment condition with p0 = 14
ok = make_builtin("paper-example", sigma0=math.sqrt(2 / 13))
for r in check_all(ok, p0=14, p1=3.5, domain=box):
    print(f"{r.assumption}: passed={r.passed}  L ~ {r.estimated_L:.3f}  growth {r.growth:.2f}")

# Far too much noise: the coercivity ratio grows like |x|^2
bad = make_builtin("paper-example", sigma0=10.0)
r = check_all(bad, p0=14, p1=3.5, domain=ModelDomain.cube(-10, 10, 1), samples=2000)[0]
print(f"sigma0 = 10: {r.assumption} passed={r.passed}, L ~ {r.estimated_L:.3g}, "
      f"grows x{r.growth:.2f} per doubling of the box")
