"""Markov factors for the restricted polynomial family on a discrete set.

The central quantity is the exact discrete operator norm

    M_alpha(n) = sup { ||D^alpha P||_E / ||P||_E : P in family, deg P <= n }

computed as the maximum over sample points x* of the LP optimum
max { (D^alpha P)(x*) : ||P||_E <= 1 }.  The derivative acts on the ambient
representative and is deliberately not reduced by the relation; on-variety
evaluation points make the restricted inequality well defined.

On top of the factors: empirical exponent fits, explicit bound checks
M^|a| n^(m|a|), neighborhood growth checks on fattened sets, and the
coefficient-bound table ||G_i|| i! / (n^(m(d-1)) ||P||) whose boundedness
in n is the computable content of the projection lemma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import thread_map
from .chebysolve import Basis, build_basis, max_functional_batch
from .geometry import (
    SampleSet,
    inflate_set,
    project_pi,
    resample_doubled,
    sup_norm,
)
from .polyring import VarietyRelation, extract_coefficients

RNG_SEED = 7654321  # fixed seed for every randomized spot check


@dataclass
class FactorDetail:
    factor: float
    alpha: tuple
    degree: int            # representative total degree label
    level: int             # basis construction level
    grading: str
    witness: np.ndarray    # unit-norm coefficients attaining the factor
    point_index: int
    lp_count: int
    basis: Basis


def markov_factor_detail(
    rel: Optional[VarietyRelation],
    E: SampleSet,
    level: int,
    alpha,
    grading: str = "tensor",
    basis: Optional[Basis] = None,
) -> FactorDetail:
    alpha = tuple(int(a) for a in alpha)
    if sum(alpha) < 1:
        raise ValueError("need a derivative multi-index with |alpha| >= 1")
    if basis is None:
        basis = build_basis(E, level, rel=rel, grading=grading)
    B = basis.design_matrix(E.points)
    D = basis.design_matrix(E.points, alpha=alpha)
    batch = max_functional_batch(B, D)
    return FactorDetail(
        batch.value, alpha, basis.degree_label, level, basis.grading,
        batch.witness, batch.objective_index, batch.lp_count, basis,
    )


def markov_factor(rel, E, level, alpha, grading: str = "tensor") -> float:
    """sup ||D^alpha P||_E / ||P||_E over the degree-filtered family."""
    return markov_factor_detail(rel, E, level, alpha, grading).factor


# -- reports ------------------------------------------------------------------


@dataclass
class FactorRow:
    degree: int
    level: int
    alpha: tuple
    factor: float
    lp_count: int
    witness: np.ndarray
    point_index: int
    grid_change: Optional[float] = None
    grid_ok: Optional[bool] = None


@dataclass
class MarkovReport:
    grading: str
    alphas: list
    degrees: list
    rows: list

    def factors(self, alpha) -> list:
        alpha = tuple(alpha)
        return [(r.degree, r.factor) for r in self.rows if r.alpha == alpha]

    def row(self, degree, alpha) -> FactorRow:
        alpha = tuple(alpha)
        for r in self.rows:
            if r.degree == degree and r.alpha == alpha:
                return r
        raise KeyError((degree, alpha))

    def to_csv(self, path, bounds=None):
        """Columns: n, alpha, factor, bound, ratio, grid_change, grid_ok."""
        bounds = bounds or {}
        with open(path, "w") as fh:
            fh.write("n,alpha,factor,bound,ratio,grid_change,grid_ok\n")
            for r in self.rows:
                key = tuple(r.alpha)
                if key in bounds:
                    M, m = bounds[key]
                    a = sum(key)
                    bound = (M ** a) * float(r.degree) ** (m * a)
                    ratio = r.factor / bound if bound > 0 else np.inf
                    btxt, rtxt = f"{bound:.17g}", f"{ratio:.17g}"
                else:
                    btxt, rtxt = "", ""
                ch = "" if r.grid_change is None else f"{r.grid_change:.17g}"
                ok = "" if r.grid_ok is None else str(r.grid_ok).lower()
                astr = " ".join(str(a) for a in r.alpha)
                fh.write(f"{r.degree},{astr},{r.factor:.17g},{btxt},{rtxt},{ch},{ok}\n")

    def to_witness_json(self, path):
        import json

        payload = [
            {
                "degree": r.degree,
                "alpha": list(r.alpha),
                "factor": r.factor,
                "coefficients": [float(c) for c in r.witness],
                "point_index": r.point_index,
            }
            for r in self.rows
        ]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)


def build_markov_report(
    rel,
    E: SampleSet,
    degrees,
    alphas,
    grading: str = "total",
    certify: bool = True,
) -> MarkovReport:
    """Factors for every (degree, alpha); monotonicity asserted at build time.

    With grading "total" the degree list is used directly as total-degree
    caps; with "tensor" the entries are y-degree levels and rows are
    labeled n = level + (d - 1).
    """
    alphas = [tuple(int(a) for a in al) for al in alphas]
    degrees = list(degrees)
    E2 = resample_doubled(E) if certify else None

    def solve(pair):
        level, alpha = pair
        return markov_factor_detail(rel, E, level, alpha, grading=grading)

    details = thread_map(solve, [(lv, al) for al in alphas for lv in degrees])
    rows = []
    for det in details:
        row = FactorRow(
            det.degree, det.level, det.alpha, det.factor,
            det.lp_count, det.witness, det.point_index,
        )
        if certify:
            poly = det.basis.reassemble(det.witness)
            dpoly = poly.differentiate(det.alpha)
            r1 = det.factor
            denom2 = sup_norm(poly, E2)
            r2 = sup_norm(dpoly, E2) / denom2 if denom2 > 0 else np.inf
            row.grid_change = abs(r2 - r1) / max(r1, r2, 1e-300)
            row.grid_ok = row.grid_change <= 1e-2
        rows.append(row)

    report = MarkovReport(grading, alphas, degrees, rows)
    for alpha in alphas:
        seq = report.factors(alpha)
        for (n1, f1), (n2, f2) in zip(seq, seq[1:]):
            if f2 < f1 - 1e-9 * max(1.0, f1):
                raise AssertionError(
                    f"factor not monotone for alpha={alpha}: "
                    f"M({n1})={f1:.6g} > M({n2})={f2:.6g}"
                )
    return report


# -- exponent fitting ------------------------------------------------------------


@dataclass
class ExponentFit:
    m_hat: float
    M_hat: float
    residual: float  # max |log deviation| over the fitted window


def fit_exponent(points, alpha_order: int = 1) -> ExponentFit:
    """Least squares for log M(n) = log M_hat + m_hat * |alpha| * log n."""
    pts = [(int(n), float(f)) for n, f in points]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 degrees to fit, got {len(pts)}")
    if any(f <= 0 for _, f in pts):
        raise ValueError("all factors must be positive for a log fit")
    if alpha_order < 1:
        raise ValueError("alpha order must be >= 1")
    logn = np.array([np.log(n) for n, _ in pts])
    logf = np.array([np.log(f) for _, f in pts])
    A = np.column_stack([np.ones_like(logn), alpha_order * logn])
    coef, *_ = np.linalg.lstsq(A, logf, rcond=None)
    resid = float(np.max(np.abs(A @ coef - logf)))
    return ExponentFit(float(coef[1]), float(np.exp(coef[0])), resid)


# -- bound checks -------------------------------------------------------------------


@dataclass
class BoundCheck:
    holds: bool
    rows: list              # (degree, factor, bound, ratio)
    worst_ratio: float
    worst_degree: int
    worst_witness: Optional[np.ndarray]


def check_fmarkov_bound(
    rel,
    E: SampleSet,
    l_max: int,
    alpha,
    M: float,
    m: float,
    grading: str = "total",
    single_constant: bool = False,
) -> BoundCheck:
    """Verify M_alpha(n) <= M^|a| n^(m |a|) across the degree window.

    ``single_constant`` switches to the one-constant form M n^(m |a|);
    the two agree for |alpha| = 1.
    """
    if M <= 0 or m <= 0:
        raise ValueError("need M, m > 0")
    alpha = tuple(int(a) for a in alpha)
    a = sum(alpha)
    d = rel.d if rel is not None else 1
    if grading == "total":
        degrees = list(range(1, l_max + d))
        levels = degrees
    else:
        levels = list(range(0, l_max + 1))
        degrees = [lv + d - 1 for lv in levels]
    worst = (-np.inf, None, None)
    rows = []
    for lv, n in zip(levels, degrees):
        det = markov_factor_detail(rel, E, lv, alpha, grading=grading)
        if single_constant:
            bound = M * float(n) ** (m * a)
        else:
            bound = (M ** a) * float(n) ** (m * a)
        ratio = det.factor / bound if bound > 0 else np.inf
        rows.append((n, det.factor, bound, ratio))
        if ratio > worst[0]:
            worst = (ratio, n, det.witness)
    holds = worst[0] <= 1.0 + 1e-9
    return BoundCheck(holds, rows, float(worst[0]), int(worst[1]), worst[2])


# -- growth on fattened sets ----------------------------------------------------------


@dataclass
class GrowthCheck:
    holds: bool
    worst_value: float
    worst_point: np.ndarray
    bound: float


def random_unit_coefficients(B: np.ndarray, count: int, seed: int = RNG_SEED) -> np.ndarray:
    """Coefficient vectors with unit discrete sup norm, fixed seed."""
    rng = np.random.default_rng(seed)
    nb = B.shape[1]
    C = rng.normal(size=(nb, count))
    norms = np.max(np.abs(B @ C), axis=0)
    norms[norms == 0] = 1.0
    return C / norms


def growth_property_check(
    rel,
    E: SampleSet,
    level: int,
    r: float,
    M: float,
    n_random: int = 100,
    grading: str = "tensor",
    seed: int = RNG_SEED,
) -> GrowthCheck:
    """Check |P| <= M ||P||_E on the 1/n^r neighborhood of E.

    Candidates: the LP-extremal polynomials for every first-order
    derivative direction plus ``n_random`` random unit-norm members.
    The neighborhood is sampled, so violations found are real while
    absence of violations is evidence.
    """
    if r <= 0 or M <= 0:
        raise ValueError("need r, M > 0")
    basis = build_basis(E, level, rel=rel, grading=grading)
    n = basis.degree_label
    fat = inflate_set(E, 1.0 / float(n) ** r, seed=seed)
    B = basis.design_matrix(E.points)
    cands = [random_unit_coefficients(B, n_random, seed)]
    for j in range(E.dim):
        alpha = tuple(1 if t == j else 0 for t in range(E.dim))
        det = markov_factor_detail(rel, E, level, alpha, grading=grading, basis=basis)
        if np.any(det.witness):
            cands.append(det.witness.reshape(-1, 1))
    C = np.hstack(cands)
    vals = np.abs(basis.design_matrix(fat.points) @ C)
    j_flat = int(np.argmax(vals))
    pt_idx, _ = np.unravel_index(j_flat, vals.shape)
    worst = float(vals.flat[j_flat])
    return GrowthCheck(worst <= M, worst, fat.points[pt_idx].copy(), float(M))


# -- coefficient-bound table -----------------------------------------------------------


@dataclass
class LemmaTrend:
    i: int
    slope: float
    predicted_rise: float
    level_max: float
    holds: bool


@dataclass
class LemmaCoeffTable:
    degrees: list
    ratios: np.ndarray       # shape (d, n_degrees): max ratio per x_k power
    trends: list
    holds: bool

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("i,n,max_ratio\n")
            for i in range(self.ratios.shape[0]):
                for j, n in enumerate(self.degrees):
                    fh.write(f"{i},{n},{self.ratios[i, j]:.17g}\n")


def lemma_coeff_bound_check(
    rel: VarietyRelation,
    E: SampleSet,
    l_max: int,
    m: float,
    n_random: int = 64,
    grading: str = "total",
    seed: int = RNG_SEED,
) -> LemmaCoeffTable:
    """Table of ||G_i||_pi(E) * i! / (n^(m(d-1)) ||P||_E) over test polynomials.

    For each degree the pool is every first-order LP-extremal witness plus
    random unit-norm members; the reported entry is the max ratio.  The
    empirical content of the coefficient lemma is that the table stays
    bounded with no increasing trend in n over the top half of the window.
    """
    d = rel.d
    proj = project_pi(E, rel.k)
    if grading == "total":
        degrees = list(range(1, l_max + 1))
        levels = degrees
    else:
        levels = list(range(0, l_max + 1))
        degrees = [lv + d - 1 for lv in levels]
    ratios = np.zeros((d, len(degrees)))
    for jd, (lv, n) in enumerate(zip(levels, degrees)):
        basis = build_basis(E, lv, rel=rel, grading=grading)
        B = basis.design_matrix(E.points)
        pool = [random_unit_coefficients(B, n_random, seed + jd)]
        for j in range(E.dim):
            alpha = tuple(1 if t == j else 0 for t in range(E.dim))
            det = markov_factor_detail(rel, E, lv, alpha, grading=grading, basis=basis)
            if np.any(det.witness):
                pool.append(det.witness.reshape(-1, 1))
        C = np.hstack(pool)
        norms = np.max(np.abs(B @ C), axis=0)
        scale = float(n) ** (m * (d - 1))
        for col in range(C.shape[1]):
            if norms[col] <= 0:
                continue  # zero polynomial is excluded by the guard
            poly = basis.reassemble(C[:, col])
            nf = extract_coefficients(poly, rel)
            for i in range(d):
                gi = nf.g[i]
                if gi.is_zero():
                    continue
                gnorm = float(
                    np.max(np.abs(gi.remove_variable(rel.k).evaluate_many(proj.points)))
                )
                ratio = gnorm * math.factorial(i) / (scale * norms[col])
                ratios[i, jd] = max(ratios[i, jd], ratio)

    half = len(degrees) // 2
    trends = []
    holds = True
    for i in range(d):
        top_n = np.array(degrees[half:], dtype=float)
        top_v = ratios[i, half:]
        level_max = float(np.max(top_v)) if len(top_v) else 0.0
        if len(top_v) >= 2 and level_max > 0:
            A = np.column_stack([np.ones_like(top_n), top_n])
            coef, *_ = np.linalg.lstsq(A, top_v, rcond=None)
            slope = float(coef[1])
            rise = slope * (top_n[-1] - top_n[0])
            ok = rise <= 0.05 * level_max
        else:
            slope, rise, ok = 0.0, 0.0, True
        trends.append(LemmaTrend(i, slope, rise, level_max, ok))
        holds = holds and ok
    return LemmaCoeffTable(degrees, ratios, trends, holds)
