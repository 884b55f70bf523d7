"""The acceptance gate: one self-contained check per claimed capability.

Each criterion prints a single pass/fail line plus indented detail lines;
``run_all`` drives them in order and reports the overall verdict.  The
checks pin their tolerances here, share one lazily built context (sample
sets, factor reports, projection series), and measure their own runtime
against the stated budget.

A small fault-injection hook exists for testing the runner itself:
injecting "markov-constant" corrupts the reference bound constants, which
must flip the bound criterion to FAIL.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import approx as approx_mod
from . import extension as extension_mod
from . import markov as markov_mod
from .chebysolve import build_basis
from .geometry import sample_box, sample_variety_set
from .markov import random_unit_coefficients
from .polyring import MultiPoly, extract_coefficients, reduce_to_normal_form
from .scenario import preset_scenario

RANDOM_SEED = 20240901


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    seconds: float
    lines: list = field(default_factory=list)

    def render(self) -> str:
        head = f"[{'PASS' if self.passed else 'FAIL'}] {self.key}: {self.title} ({self.seconds:.1f}s)"
        return "\n".join([head] + [f"    {ln}" for ln in self.lines])


class AcceptanceContext:
    """Lazily built shared state for the criteria."""

    def __init__(self, faults=()):
        self.faults = frozenset(faults)
        self._cache = {}

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- shared ingredients ---------------------------------------------

    def interval(self):
        return self._get("interval", lambda: sample_box((((-1.0, 1.0),),), density=128))

    def cubic(self):
        return self._get("cubic", lambda: preset_scenario("example-2-2"))

    def cubic_set(self):
        return self._get("cubic_set", lambda: self.cubic().build_sample_set())

    def markov_report(self):
        def build():
            scn = self.cubic()
            return markov_mod.build_markov_report(
                scn.relation, self.cubic_set(), range(1, 11),
                [(1, 0), (0, 1)], grading="total",
            )
        return self._get("markov_report", build)

    def exp_values(self):
        def build():
            scn = self.cubic()
            return approx_mod.target_values("exp-xy", self.cubic_set(), scn.relation)
        return self._get("exp_values", build)

    def exp_series(self):
        def build():
            scn = self.cubic()
            return approx_mod.projection_series(
                self.exp_values(), scn.relation, self.cubic_set(), 16
            )
        return self._get("exp_series", build)

    def arcs(self):
        return self._get("arcs", lambda: preset_scenario("example-2-3"))

    def arcs_set(self):
        return self._get("arcs_set", lambda: self.arcs().build_sample_set())

    def slow_norms(self):
        def build():
            E = self.arcs_set()
            return {n: approx_mod.counterexample_norm(n, E) for n in range(1, 61)}
        return self._get("slow_norms", build)

    def bound_constants(self):
        # test hook: an injected wrong constant must flip the bound check
        if "markov-constant" in self.faults:
            return {(1, 0): (0.06, 2.0), (0, 1): (0.02, 2.0)}
        return {(1, 0): (6.0, 2.0), (0, 1): (2.0, 2.0)}


# -- criteria ---------------------------------------------------------------------


def _c1_classical(ctx: AcceptanceContext):
    """Classical derivative factor on [-1, 1] matches n^2 within 1%."""
    budget = 30.0
    t0 = time.perf_counter()
    E = ctx.interval()
    lines = []
    ok = True
    for n in range(3, 11):
        factor = markov_mod.markov_factor(None, E, n, (1,))
        rel_err = abs(factor - n * n) / (n * n)
        good = rel_err <= 0.01
        ok = ok and good
        lines.append(f"n={n}: factor {factor:.4f} vs {n * n} (rel err {rel_err:.2e})")
    dt = time.perf_counter() - t0
    if dt > budget:
        ok = False
        lines.append(f"runtime {dt:.1f}s exceeds budget {budget:.0f}s")
    return ok, lines, dt


def _c2_cubic_bounds(ctx: AcceptanceContext):
    """Three-branch cubic set: factors below 6n^2 / 2n^2, random spot checks."""
    budget = 180.0
    t0 = time.perf_counter()
    rep = ctx.markov_report()
    scn = ctx.cubic()
    E = ctx.cubic_set()
    bounds = ctx.bound_constants()
    lines = []
    ok = True
    for alpha in ((1, 0), (0, 1)):
        M, m = bounds[alpha]
        worst = 0.0
        for n, factor in rep.factors(alpha):
            ratio = factor / (M * float(n) ** m)
            worst = max(worst, ratio)
        good = worst <= 1.0 + 1e-9
        ok = ok and good
        lines.append(
            f"alpha={alpha}: worst factor/bound ratio {worst:.4f} with M={M:g}, m={m:g}"
            + ("" if good else "  <- bound violated")
        )
    # 1000 random members spread over the degree window never beat the factor
    rng_seed = RANDOM_SEED
    checks = 0
    margin_bad = 0
    for alpha in ((1, 0), (0, 1)):
        for n in range(1, 11):
            basis = build_basis(E, n, rel=scn.relation, grading="total")
            B = basis.design_matrix(E.points)
            D = basis.design_matrix(E.points, alpha=alpha)
            C = random_unit_coefficients(B, 50, seed=rng_seed + n)
            ratios = np.max(np.abs(D @ C), axis=0) / np.max(np.abs(B @ C), axis=0)
            factor = rep.row(n, alpha).factor
            margin_bad += int(np.sum(ratios > factor + 1e-7))
            checks += C.shape[1]
    good = margin_bad == 0
    ok = ok and good
    lines.append(f"{checks} random spot checks; {margin_bad} exceeded the factor + 1e-7")
    certified = sum(1 for r in rep.rows if r.grid_ok)
    lines.append(f"grid certification: {certified}/{len(rep.rows)} rows within 1e-2")
    dt = time.perf_counter() - t0
    if dt > budget:
        ok = False
        lines.append(f"runtime {dt:.1f}s exceeds budget {budget:.0f}s")
    return ok, lines, dt


def _c3_exponent_fit(ctx: AcceptanceContext):
    """Fitted growth exponent in [1.0, 2.2]; bound holds across the window."""
    t0 = time.perf_counter()
    rep = ctx.markov_report()
    pairs = [(n, f) for n, f in rep.factors((1, 0)) if 4 <= n <= 10]
    fit = markov_mod.fit_exponent(pairs)
    lines = [f"fitted exponent {fit.m_hat:.4f}, constant {fit.M_hat:.4f}"]
    ok = 1.0 <= fit.m_hat <= 2.2
    if not ok:
        lines.append("exponent outside [1.0, 2.2]")
    M, m = 6.0, 2.0
    worst = max(f / (M * float(n) ** m) for n, f in rep.factors((1, 0)))
    good = worst <= 1.0 + 1e-9
    lines.append(f"bound M=6, m=2 worst ratio {worst:.4f}")
    ok = ok and good
    return ok, lines, time.perf_counter() - t0


def _c4_gauss_identity(ctx: AcceptanceContext):
    """Hypergeometric value at z=1 equals 3(1+k) to 1e-10 relative."""
    t0 = time.perf_counter()
    lines = []
    ok = True
    worst = 0.0
    for k in range(0, 21):
        val = approx_mod.gauss_2f1(1.0, 2.0 / 3.0 + k, 2.0 + k, 1.0)
        expect = 3.0 * (1 + k)
        rel = abs(val - expect) / expect
        worst = max(worst, rel)
        if rel > 1e-10:
            ok = False
            lines.append(f"k={k}: {val!r} vs {expect} (rel {rel:.2e})")
    lines.append(f"k = 0..20, worst relative error {worst:.2e}")
    return ok, lines, time.perf_counter() - t0


def _c5_tail_identity(ctx: AcceptanceContext):
    """Tail closed form vs direct summation to 1e-9 relative."""
    t0 = time.perf_counter()
    lines = []
    ok = True
    worst = 0.0
    for n in (5, 10, 20):
        for x in (0.25, 1.0 / 3.0, 0.5):
            closed = approx_mod.tail_closed_form(n, x)
            direct = approx_mod.tail_direct(n, x)
            rel = abs(closed - direct) / max(abs(closed), abs(direct))
            worst = max(worst, rel)
            if rel > 1e-9:
                ok = False
                lines.append(f"n={n}, x={x:.4f}: closed {closed!r} direct {direct!r}")
    lines.append(f"9 pairs checked, worst relative gap {worst:.2e}")
    return ok, lines, time.perf_counter() - t0


def _c6_slow_decay(ctx: AcceptanceContext):
    """Slow-family decay: n^10-scaled strict decrease, log-envelope window,
    derivative ratio past n^10."""
    budget = 60.0
    t0 = time.perf_counter()
    norms = ctx.slow_norms()
    lines = []

    scaled = {n: float(n) ** 10 * norms[n] for n in range(20, 61)}
    strict = all(scaled[n + 1] < scaled[n] for n in range(20, 60))
    lines.append(f"n^10 ||P_n|| strictly decreasing on [20, 60]: {strict}")

    logs = {n: math.log(norms[n]) / n for n in range(20, 61)}
    lo, hi = min(logs.values()), max(logs.values())
    in_window = all(-1.525 <= v <= -1.25 for v in logs.values())
    lines.append(
        f"log ||P_n|| / n in [-1.525, -1.25] on [20, 60]: {in_window} "
        f"(measured range [{lo:.4f}, {hi:.4f}])"
    )
    if not in_window:
        lines.append(
            "measured values sit below the stated envelope window for n < ~58: "
            "the norm carries a 4^-(n+1) n^(-4/3) prefactor, so log/n approaches "
            "-log 4 = -1.386 from below slower than the stated 10% band"
        )

    ratio_ok = all(1.0 / norms[n] >= float(n) ** 10 for n in range(20, 61))
    lines.append(f"derivative ratio 1/||P_n|| >= n^10 on [20, 60]: {ratio_ok}")

    dt = time.perf_counter() - t0
    ok = strict and in_window and ratio_ok
    if dt > budget:
        ok = False
        lines.append(f"runtime {dt:.1f}s exceeds budget {budget:.0f}s")
    return ok, lines, dt


def _c7_coefficient_table(ctx: AcceptanceContext):
    """Coefficient-bound table bounded with no rising trend on the top half."""
    t0 = time.perf_counter()
    scn = ctx.cubic()
    table = markov_mod.lemma_coeff_bound_check(
        scn.relation, ctx.cubic_set(), 10, m=2.0, n_random=50
    )
    lines = []
    ok = bool(np.all(np.isfinite(table.ratios))) and table.holds
    lines.append(f"max ratio {float(np.max(table.ratios)):.4e} over degrees 1..10")
    for tr in table.trends:
        lines.append(
            f"i={tr.i}: top-half slope {tr.slope:+.3e}, predicted rise "
            f"{tr.predicted_rise:+.3e} vs 5% of level {0.05 * tr.level_max:.3e} "
            f"({'ok' if tr.holds else 'RISING'})"
        )
    return ok, lines, time.perf_counter() - t0


def _c8_ring_properties(ctx: AcceptanceContext):
    """Reduction/ring property suite on 1000 seeded random cases."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(RANDOM_SEED)
    relations = []
    for name in ("example-2-2", "example-2-3", "example-2-4-family"):
        scn = preset_scenario(name)
        E = sample_variety_set(scn.relation, scn.branch_spec, 64)
        idx = rng.permutation(E.npts)[:200]
        relations.append((scn.relation, E.points[idx]))

    def random_poly(max_deg=8, n_terms=10):
        terms = {}
        for _ in range(n_terms):
            e = (int(rng.integers(0, max_deg + 1)), int(rng.integers(0, max_deg + 1)))
            if sum(e) <= max_deg:
                terms[e] = terms.get(e, 0.0) + float(rng.uniform(-1, 1))
        return MultiPoly(terms, 2)

    sound_bad = idem_bad = hom_bad = extract_bad = 0
    cases = 1000
    for case in range(cases):
        rel, pts = relations[case % len(relations)]
        p = random_poly()
        nf = reduce_to_normal_form(p, rel)
        re_p = nf.reassemble()
        v1 = p.evaluate_many(pts)
        v2 = re_p.evaluate_many(pts)
        if np.any(np.abs(v1 - v2) > 1e-9 * (1 + np.abs(v1))):
            sound_bad += 1
        nf2 = reduce_to_normal_form(re_p, rel)
        if nf2.g != nf.g:
            idem_bad += 1
        if not extract_coefficients(re_p, rel).g == nf.g:
            extract_bad += 1
        if case % 2 == 0:
            a = random_poly(max_deg=5, n_terms=6)
            b = random_poly(max_deg=5, n_terms=6)
            r1 = reduce_to_normal_form(a * b, rel).reassemble()
            ra = reduce_to_normal_form(a, rel).reassemble()
            rb = reduce_to_normal_form(b, rel).reassemble()
            r2 = reduce_to_normal_form(ra * rb, rel).reassemble()
            scale = max(1.0, r1.coefficient_scale())
            if (r1 - r2).coefficient_scale() > 1e-9 * scale:
                hom_bad += 1
    ok = sound_bad == idem_bad == hom_bad == extract_bad == 0
    lines = [
        f"{cases} cases over 3 relations: soundness failures {sound_bad}, "
        f"idempotence {idem_bad}, homomorphism {hom_bad}, extraction {extract_bad}"
    ]
    return ok, lines, time.perf_counter() - t0


def _c9_extension(ctx: AcceptanceContext):
    """Gluing construction: on-set agreement, locality, telescoping, stability."""
    t0 = time.perf_counter()
    series = ctx.exp_series()
    values = ctx.exp_values()
    E = ctx.cubic_set()
    lines = []
    ok = True

    model = extension_mod.build_extension(series, r=3, L=12)
    on_e = extension_mod.evaluate_extension_many(model, E.points)
    err = float(np.max(np.abs(on_e - values)))
    d12 = series.entry(12).error
    good = err <= d12 + 1e-8
    ok = ok and good
    lines.append(f"on-set agreement {err:.3e} vs error(12) + 1e-8 = {d12 + 1e-8:.3e}")

    p0 = series.entry(0).normal_form.reassemble()
    far = np.array([[2.5, 0.4], [-3.0, 1.2], [4.0, -2.0], [2.1, 0.0]])
    got = extension_mod.evaluate_extension_many(model, far)
    ref = p0.evaluate_many(far)
    loc = float(np.max(np.abs(got - ref))) / (1 + float(np.max(np.abs(ref))))
    good = loc <= 1e-12
    ok = ok and good
    lines.append(f"off-support locality {loc:.3e} (limit 1e-12)")

    tele = extension_mod.telescoped_form(model)
    top = series.entry(12).normal_form
    worst = 0.0
    for i in range(3):
        diff = (tele.g[i] - top.g[i]).coefficient_scale()
        scale = 1.0 + top.g[i].coefficient_scale()
        worst = max(worst, diff / scale)
    good = worst <= 1e-12
    ok = ok and good
    lines.append(f"telescoping identity deviation {worst:.3e} (limit 1e-12)")

    m8 = extension_mod.build_extension(series, r=3, L=8)
    s8 = extension_mod.derivative_seminorm(m8, E, 1).value
    s12 = extension_mod.derivative_seminorm(model, E, 1).value
    drift = abs(s12 - s8) / max(s8, s12)
    good = drift <= 0.05
    ok = ok and good
    lines.append(f"order-1 seminorm drift L=8 -> 12: {drift:.3%} (limit 5%)")
    return ok, lines, time.perf_counter() - t0


def _c10_rapid_decrease(ctx: AcceptanceContext):
    """Smooth-target projection errors: decreasing-tail verdicts for r = 1, 2, 4."""
    t0 = time.perf_counter()
    series = ctx.exp_series()
    diag = approx_mod.rapid_decrease_diagnostic(series, [1, 2, 4])
    lines = []
    ok = True
    for row in diag.rows:
        good = row.verdict == "decreasing-tail"
        ok = ok and good
        tail = ", ".join(f"{v:.2e}" for v in row.sequence[-6:])
        lines.append(f"r={row.r:g}: verdict {row.verdict} (tail: {tail})")
    if not ok:
        lines.append(
            "errors reach the double-precision LP floor (~1e-15 of the data "
            "scale) before level 16, so the scaled tail cannot decrease "
            "strictly; the verdicts above report the floor honestly"
        )
    return ok, lines, time.perf_counter() - t0


CRITERIA = [
    ("C1", "classical interval derivative factors match n^2 within 1%", _c1_classical),
    ("C2", "cubic-set factors below the 6n^2 / 2n^2 reference bounds", _c2_cubic_bounds),
    ("C3", "fitted factor exponent lies in [1.0, 2.2] and the bound holds", _c3_exponent_fit),
    ("C4", "hypergeometric closed form at z=1 equals 3(1+k)", _c4_gauss_identity),
    ("C5", "tail closed form agrees with direct summation", _c5_tail_identity),
    ("C6", "slow-family norms: n^10 decay window and derivative ratio", _c6_slow_decay),
    ("C7", "coefficient-bound table bounded with no rising trend", _c7_coefficient_table),
    ("C8", "reduction/ring property suite on 1000 random cases", _c8_ring_properties),
    ("C9", "smooth gluing: agreement, locality, telescoping, stability", _c9_extension),
    ("C10", "smooth-target errors pass decreasing-tail verdicts", _c10_rapid_decrease),
]


def criterion_keys():
    return [key for key, _, _ in CRITERIA]


def run_criterion(key: str, ctx: AcceptanceContext) -> CriterionResult:
    for k, title, fn in CRITERIA:
        if k == key:
            ok, lines, dt = fn(ctx)
            return CriterionResult(k, title, bool(ok), dt, lines)
    raise KeyError(key)


def run_all(keys=None, faults=(), stream=None):
    """Run the acceptance suite; returns (all_passed, results)."""
    ctx = AcceptanceContext(faults=faults)
    selected = keys or criterion_keys()
    results = []
    for key in selected:
        res = run_criterion(key, ctx)
        results.append(res)
        if stream is not None:
            print(res.render(), file=stream, flush=True)
    return all(r.passed for r in results), results
