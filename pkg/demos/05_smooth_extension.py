# Gluing metric projections into a globally smooth function.
#
# Approximate f(x, y) = exp(x) y on the cubic surface set by best uniform
# approximations P_0, P_1, ..., then glue the increments with bump
# functions of shrinking radius 1/l^r.  The result agrees with the top
# projection on the set, collapses to P_0 far away, and keeps stable
# first-order derivative seminorms.

import numpy as np

from markovlab import preset_scenario
from markovlab.approx import projection_series, rapid_decrease_diagnostic, target_values
from markovlab.extension import (
    build_extension,
    derivative_seminorm,
    evaluate_extension,
    evaluate_extension_many,
)

scn = preset_scenario("example-2-2")
E = scn.build_sample_set()
values = target_values("exp-xy", E, scn.relation)

series = projection_series(values, scn.relation, E, 12)
print("projection errors (exp(x) y on the cubic set):")
for e in series.entries:
    print(f"  level {e.level:2d}: {e.error:.3e}")

diag = rapid_decrease_diagnostic(series, [1, 2, 4])
for row in diag.rows:
    print(f"scaled-decay verdict r={row.r:g}: {row.verdict}")

model = build_extension(series, r=3, L=12)
on_e = evaluate_extension_many(model, E.points)
print(f"\non-set agreement: {np.max(np.abs(on_e - values)):.3e}")

p0 = series.entry(0).normal_form.reassemble()
for pt in ((2.5, 0.4), (0.3, 0.5), (1.05, 0.0)):
    val = evaluate_extension(model, pt)
    print(f"extension at {pt}: {val:+.6f}   (P_0 there: {p0.evaluate(pt):+.6f})")

for L in (8, 12):
    m = build_extension(series, r=3, L=L)
    sem = derivative_seminorm(m, E, 1)
    print(f"first-order seminorm with window L={L:2d}: {sem.value:.6f}")
