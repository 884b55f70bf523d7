# Derivative factors: the classical interval and a cubic surface set.
#
# The factor at degree n is the exact discrete operator norm
#     sup { ||D P||_E / ||P||_E : deg P <= n },
# computed by linear programming over the unit sup-norm ball.  On [-1, 1]
# it reproduces the classical n^2 law; on the three-branch cubic set both
# first-order directions stay below the 6n^2 / 2n^2 reference bounds.

from markovlab import fit_exponent, markov_factor, preset_scenario
from markovlab.geometry import sample_box
from markovlab.markov import build_markov_report

interval = sample_box((((-1.0, 1.0),),), density=128)
print("classical interval, first derivative:")
pairs = []
for n in (3, 5, 8, 10):
    f = markov_factor(None, interval, n, (1,))
    pairs.append((n, f))
    print(f"  n={n:2d}: factor {f:9.4f}   n^2 = {n * n}")

scn = preset_scenario("example-2-2")
E = scn.build_sample_set()
print(f"\ncubic surface set ({E.npts} points), degrees 1..6:")
report = build_markov_report(scn.relation, E, range(1, 7), [(1, 0), (0, 1)],
                             grading="total")
print("   n    d/dx factor   6n^2    d/dy factor   2n^2")
for n in range(1, 7):
    fx = report.row(n, (1, 0)).factor
    fy = report.row(n, (0, 1)).factor
    print(f"  {n:2d}   {fx:11.4f}   {6 * n * n:4d}    {fy:11.4f}   {2 * n * n:4d}")

fit = fit_exponent([(n, f) for n, f in report.factors((1, 0)) if n >= 3])
print(f"\nfitted growth law for d/dx: {fit.M_hat:.3f} * n^{fit.m_hat:.3f}")
print("grid-certified rows:", sum(1 for r in report.rows if r.grid_ok), "/", len(report.rows))
