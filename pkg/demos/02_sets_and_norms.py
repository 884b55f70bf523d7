# Discretizing surface sets and measuring sup norms.
#
# Sample the three branches of y^3 = (1 - x^2) y over x in [-1, 1], project
# out y, fatten the set, and check how well Chebyshev grids resolve norms.

import numpy as np

from markovlab import (
    Branch,
    BranchSpec,
    BumpFunction,
    inflate_set,
    parse_poly,
    project_pi,
    refine_check,
    sample_variety_set,
)
from markovlab.geometry import sample_box, sup_norm_witness
from markovlab.polyring import MultiPoly, VarietyRelation

g = parse_poly("1 + -1*x1^2", 2)
rel = VarietyRelation(2, 2, 3, (MultiPoly.zero(2), g, MultiPoly.zero(2)))
spec = BranchSpec(
    branches=(Branch("zero"), Branch("sqrt", 1, g), Branch("sqrt", -1, g)),
    boxes=(((-1.0, 1.0),),),
)

E = sample_variety_set(rel, spec, density=256)
print(f"sampled {E.npts} points, worst membership residual "
      f"{np.max(rel.residual_many(E.points)):.1e}")

proj = project_pi(E, 2)
print(f"projection onto the x-axis: {proj.npts} points in "
      f"[{proj.points.min():.0f}, {proj.points.max():.0f}]")

# sup norms come with a maximizer witness
p = parse_poly("1*x1^3*x2 + -0.5*x2^2", 2)
w = sup_norm_witness(p, E)
print(f"||x^3 y - y^2/2|| = {w.value:.6f} at {w.point}")

# grid certification: halving the spacing barely moves low-degree norms
print(f"refine change for the same polynomial: {refine_check(p, E):.2e}")

# fattened neighborhoods for growth experiments
fat = inflate_set(E, radius=1.0 / 16.0, samples_per_point=4)
print(f"fattened set has {fat.npts} points within 1/16 of the surface set")

# bump functions: 1 near the base set, 0 beyond epsilon, controlled slopes
K = sample_box((((0.0, 1.0),),), density=256)
for eps in (0.2, 0.1):
    h = BumpFunction(K, eps)
    grid = np.linspace(-0.4, 1.4, 1801).reshape(-1, 1)
    vals = h.evaluate_many(grid)
    slope = np.max(np.abs(np.diff(vals))) / (grid[1, 0] - grid[0, 0])
    print(f"eps={eps}: range [{vals.min():.0f}, {vals.max():.0f}], "
          f"max slope {slope:.1f} <= bound {h.derivative_bound(1):.1f}")
