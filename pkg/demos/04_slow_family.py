# A family where no derivative growth bound can hold.
#
# On the cube-root surface y^3 = 1 - x^2 over |x| in [1/4, 1/2], the
# polynomials P_n = y - (partial sums of the cube-root series) have sup
# norms decaying like 4^(-n), yet their y-derivative is identically 1.
# The ratio ||d/dy P_n|| / ||P_n|| therefore outruns every power n^r.

import math

from markovlab import counterexample_norm, counterexample_poly, gauss_2f1, preset_scenario
from markovlab.approx import tail_closed_form, tail_direct

scn = preset_scenario("example-2-3")
E = scn.build_sample_set()

# the closed form of the tail is cross-checked against direct summation
print("tail identity spot checks (closed form vs direct summation):")
for n, x in ((5, 0.5), (10, 1.0 / 3.0), (20, 0.25)):
    c, d = tail_closed_form(n, x), tail_direct(n, x)
    print(f"  n={n:2d}, x={x:.4f}: {c:+.6e} vs {d:+.6e}")

# the hypergeometric factor at z=1 collapses to 3(1+k)
print("\nhypergeometric closed form at z=1:")
for k in (0, 3, 10):
    print(f"  k={k:2d}: F(1, 2/3+k; 2+k; 1) = {gauss_2f1(1, 2/3 + k, 2 + k, 1.0):.12f}"
          f"  = 3(1+k) = {3 * (1 + k)}")

print("\nnorm decay (note the n^10-scaled column still collapsing):")
print("   n        ||P_n||        n^10 ||P_n||    log||P_n||/n")
for n in (10, 20, 30, 40, 50, 60):
    v = counterexample_norm(n, E)
    print(f"  {n:2d}   {v:.6e}   {n**10 * v:.6e}   {math.log(v) / n:+.4f}")

p = counterexample_poly(30)
print(f"\nP_30 has y-degree {p.max_power(2)} and d/dy P_30 = "
      f"{p.differentiate((0, 1)).terms}")
ratio = 1.0 / counterexample_norm(30, E)
print(f"derivative ratio at n=30: {ratio:.3e}  (n^10 = {30.0**10:.3e})")
