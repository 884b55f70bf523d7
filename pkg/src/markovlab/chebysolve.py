"""Dense LP engine for the two extremal problems behind every experiment:

  * best uniform (minimax) approximation of data on a finite point set, and
  * maximization of a linear functional over the unit sup-norm ball of a
    finite-dimensional polynomial space.

Polynomial spaces are spanned by tensorized Chebyshev bases (first kind,
mapped to the bounding box of the sample set) times powers of the
distinguished variable, which keeps the LP columns near-orthogonal on
Chebyshev-sampled sets; raw monomials above degree ~20 would be
numerically rank-deficient.

LPs are solved with the HiGHS simplex backend (vertex solutions, so the
discrete equioscillation structure of minimax fits is preserved) at
feasibility/optimality tolerances 1e-9 and an iteration cap; a stall is an
explicit failure status, never a silent wrong optimum.

For the functional problem over many evaluation points, per-point LPs are
pruned exactly using weak duality:

    max { phi . c : |(Bc)_j| <= 1 }  =  min { ||w||_1 : B^T w = phi }

so the l1 norm of *any* solution of B^T w = phi is a certified upper bound
for that point.  Least-squares dual points and support reuse from solved
LPs drive the bounds down until every unsolved point is dominated by a
value already achieved, which leaves the exact maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as _cheb
from scipy.optimize import linprog

from .geometry import SampleSet
from .polyring import MultiPoly, NormalForm, VarietyRelation

FEASIBILITY_TOL = 1e-9
ITERATION_CAP_FACTOR = 50  # cap = factor * (rows + cols)

_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": FEASIBILITY_TOL,
    "dual_feasibility_tolerance": FEASIBILITY_TOL,
}


class LPFailureError(RuntimeError):
    """Solver did not return a usable optimum (stall or numerical failure)."""


class DegenerateBasisError(RuntimeError):
    """A basis element vanishes identically on the sample set (or the
    restriction to the set is linearly dependent), so the functional
    problem is unbounded."""


# -- generic LP interface --------------------------------------------------


@dataclass
class LPProblem:
    """minimize (or maximize) objective . x subject to rows and bounds.

    rows: list of (coefficients, sense, rhs) with sense in {"<=", ">=", "=="}.
    bounds: per-variable (lo, hi) with None for unbounded; default free.
    """

    objective: np.ndarray
    rows: list
    bounds: Optional[list] = None
    maximize: bool = False

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective must be finite")
        for i, (coeffs, sense, rhs) in enumerate(self.rows):
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != self.objective.shape:
                raise ValueError(f"row {i} has {coeffs.shape} coefficients")
            if sense not in ("<=", ">=", "=="):
                raise ValueError(f"row {i} has unknown sense {sense!r}")
            if not (np.all(np.isfinite(coeffs)) and np.isfinite(rhs)):
                raise ValueError(f"row {i} has non-finite entries")
            self.rows[i] = (coeffs, sense, float(rhs))


@dataclass
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "stalled"
    value: Optional[float]
    x: Optional[np.ndarray]


_STATUS_MAP = {0: "optimal", 1: "stalled", 2: "infeasible", 3: "unbounded", 4: "stalled"}


def solve_lp(prob: LPProblem, dump_path: Optional[str] = None) -> LPSolution:
    """Solve an LPProblem; statuses are explicit, a stall is never 'optimal'."""
    n = len(prob.objective)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for coeffs, sense, rhs in prob.rows:
        if sense == "<=":
            a_ub.append(coeffs)
            b_ub.append(rhs)
        elif sense == ">=":
            a_ub.append(-coeffs)
            b_ub.append(-rhs)
        else:
            a_eq.append(coeffs)
            b_eq.append(rhs)
    bounds = prob.bounds if prob.bounds is not None else [(None, None)] * n
    cap = ITERATION_CAP_FACTOR * (len(prob.rows) + n)
    obj = -prob.objective if prob.maximize else prob.objective
    if dump_path:
        _dump_tableau(prob, dump_path)
    res = linprog(
        obj,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
        options=dict(_HIGHS_OPTIONS, maxiter=cap),
    )
    status = _STATUS_MAP.get(res.status, "stalled")
    if status != "optimal":
        return LPSolution(status, None, None)
    value = -res.fun if prob.maximize else res.fun
    return LPSolution("optimal", float(value), np.asarray(res.x))


def _dump_tableau(prob: LPProblem, path: str):
    with open(path, "w") as fh:
        kind = "max" if prob.maximize else "min"
        fh.write(f"{kind} " + " ".join(f"{v:.17g}" for v in prob.objective) + "\n")
        for coeffs, sense, rhs in prob.rows:
            fh.write(" ".join(f"{v:.17g}" for v in coeffs) + f" {sense} {rhs:.17g}\n")


# -- polynomial bases --------------------------------------------------------


@dataclass(frozen=True)
class BasisElement:
    ydegs: tuple  # Chebyshev degree per free axis
    kpow: int     # power of the distinguished variable (0 without a relation)


class Basis:
    """Ordered basis of P_l(y) (x) P_{d-1}(x_k) restricted to a sample set.

    grading "tensor": y total degree <= level, all x_k powers 0..d-1;
    the representative total degree is then level + (d - 1).
    grading "total": |y degree| + x_k power <= level.
    Without a relation the basis is plain tensor Chebyshev of total
    degree <= level in all variables.
    """

    def __init__(self, nvars, level, elements, axes, centers, halfwidths,
                 rel=None, grading="tensor"):
        self.nvars = nvars
        self.level = level
        self.elements = list(elements)
        self.axes = list(axes)               # 0-based variable indices
        self.centers = np.asarray(centers, dtype=float)
        self.halfwidths = np.asarray(halfwidths, dtype=float)
        self.rel = rel
        self.grading = grading
        self._poly_cache = {}

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def degree_label(self) -> int:
        """Representative total degree of the spanned space."""
        if self.grading == "total" or self.rel is None:
            return self.level
        return self.level + (self.rel.d - 1)

    # -- evaluation ---------------------------------------------------------

    def _axis_tables(self, points, orders):
        """Chebyshev value tables per free axis and derivative order.

        tables[a][o] has shape (npts, level+1); entry [:, m] is the o-th
        derivative of T_m at the mapped coordinate, chain-rule scaled.
        """
        pts = np.asarray(points, dtype=float)
        max_deg = 0
        for e in self.elements:
            if e.ydegs:
                max_deg = max(max_deg, max(e.ydegs))
        tables = []
        for a, j in enumerate(self.axes):
            u = (pts[:, j] - self.centers[a]) / self.halfwidths[a]
            per_order = {}
            for o in orders[a]:
                cols = np.zeros((len(pts), max_deg + 1))
                scale = self.halfwidths[a] ** (-o)
                for m in range(max_deg + 1):
                    if o > m:
                        continue
                    coef = np.zeros(m + 1)
                    coef[m] = 1.0
                    if o:
                        coef = _cheb.chebder(coef, o)
                    cols[:, m] = _cheb.chebval(u, coef) * scale
                per_order[o] = cols
            tables.append(per_order)
        return tables

    def design_matrix(self, points, alpha=None) -> np.ndarray:
        """Matrix of D^alpha applied to each basis element, at each point.

        Derivatives act on the ambient representative (per-axis Chebyshev
        derivative recurrences times the falling factorial on x_k^i); the
        result is not reduced by the relation.
        """
        pts = np.asarray(points, dtype=float)
        npts = len(pts)
        if alpha is None:
            alpha = (0,) * self.nvars
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise ValueError(f"multi-index length {len(alpha)} != nvars {self.nvars}")
        orders = [(alpha[j],) for j in self.axes]
        tables = self._axis_tables(pts, orders)
        if self.rel is not None:
            k0 = self.rel.k0
            ka = alpha[k0]
            xk = pts[:, k0]
            kd = max((e.kpow for e in self.elements), default=0)
            kcols = np.zeros((npts, kd + 1))
            for i in range(kd + 1):
                if ka > i:
                    continue
                mult = 1.0
                for t in range(ka):
                    mult *= i - t
                kcols[:, i] = mult * xk ** (i - ka)
        out = np.empty((npts, self.size))
        for b, el in enumerate(self.elements):
            col = np.ones(npts)
            for a in range(len(self.axes)):
                col = col * tables[a][orders[a][0]][:, el.ydegs[a]]
            if self.rel is not None:
                col = col * kcols[:, el.kpow]
            out[:, b] = col
        return out

    # -- expanded polynomials -------------------------------------------------

    def _axis_cheb_poly(self, a: int, m: int) -> MultiPoly:
        key = ("axis", a, m)
        if key not in self._poly_cache:
            j = self.axes[a]
            u = (MultiPoly.variable(self.nvars, j + 1) - float(self.centers[a])) * (
                1.0 / float(self.halfwidths[a])
            )
            t_prev = MultiPoly.constant(self.nvars, 1.0)
            t_cur = u
            if m == 0:
                self._poly_cache[key] = t_prev
                return t_prev
            for _ in range(m - 1):
                t_prev, t_cur = t_cur, 2.0 * u * t_cur - t_prev
            self._poly_cache[key] = t_cur
        return self._poly_cache[key]

    def element_ypart(self, b: int) -> MultiPoly:
        """Expanded y-part of element b (no x_k factor)."""
        el = self.elements[b]
        key = ("ypart", el.ydegs)
        if key not in self._poly_cache:
            poly = MultiPoly.constant(self.nvars, 1.0)
            for a, m in enumerate(el.ydegs):
                if m:
                    poly = poly * self._axis_cheb_poly(a, m)
            self._poly_cache[key] = poly
        return self._poly_cache[key]

    def element_poly(self, b: int) -> MultiPoly:
        el = self.elements[b]
        poly = self.element_ypart(b)
        if self.rel is not None and el.kpow:
            poly = poly * self.rel.xk_monomial(el.kpow)
        return poly

    def reassemble(self, coeffs) -> MultiPoly:
        coeffs = np.asarray(coeffs, dtype=float)
        acc = MultiPoly.zero(self.nvars)
        for b, c in enumerate(coeffs):
            if c != 0.0:
                acc = acc + float(c) * self.element_poly(b)
        return acc

    def to_normal_form(self, coeffs) -> NormalForm:
        if self.rel is None:
            raise ValueError("normal form needs a relation-based basis")
        coeffs = np.asarray(coeffs, dtype=float)
        g = [MultiPoly.zero(self.nvars) for _ in range(self.rel.d)]
        for b, c in enumerate(coeffs):
            if c != 0.0:
                el = self.elements[b]
                g[el.kpow] = g[el.kpow] + float(c) * self.element_ypart(b)
        return NormalForm(tuple(g), self.rel)


def _multi_indices(naxes: int, total: int):
    """All exponent tuples of length naxes with sum <= total, graded order."""
    if naxes == 0:
        yield ()
        return
    for s in range(total + 1):
        # enumerate compositions of s in lexicographic order
        def rec(prefix, remaining, slots):
            if slots == 1:
                yield prefix + (remaining,)
                return
            for v in range(remaining + 1):
                yield from rec(prefix + (v,), remaining - v, slots - 1)
        yield from rec((), s, naxes)


def build_basis(
    E: SampleSet,
    level: int,
    rel: Optional[VarietyRelation] = None,
    grading: str = "tensor",
) -> Basis:
    """Tensor Chebyshev basis over the bounding box of E (per free axis).

    With a relation: elements T_beta(y) x_k^i, i = 0..d-1; grading "tensor"
    caps |beta| <= level, grading "total" caps |beta| + i <= level.
    Without: plain tensor Chebyshev with |beta| <= level over all axes.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if grading not in ("tensor", "total"):
        raise ValueError(f"unknown grading {grading!r}")
    pts = E.points
    if rel is not None:
        if E.dim != rel.nvars:
            raise ValueError(f"sample set dim {E.dim} != relation nvars {rel.nvars}")
        axes = rel.y_indices()
    else:
        axes = list(range(E.dim))
    lo = pts[:, axes].min(axis=0)
    hi = pts[:, axes].max(axis=0)
    centers = 0.5 * (lo + hi)
    halfwidths = np.maximum(0.5 * (hi - lo), 1e-12)

    elements = []
    if rel is None:
        for beta in _multi_indices(len(axes), level):
            elements.append(BasisElement(beta, 0))
    else:
        for i in range(rel.d):
            cap = level if grading == "tensor" else level - i
            if cap < 0:
                continue
            for beta in _multi_indices(len(axes), cap):
                elements.append(BasisElement(beta, i))
        elements.sort(key=lambda e: (e.kpow, sum(e.ydegs), e.ydegs))
    return Basis(E.dim, level, elements, axes, centers, halfwidths, rel, grading)


# -- minimax fit ---------------------------------------------------------------


@dataclass
class MinimaxFit:
    coefficients: np.ndarray
    error: float          # LP optimum t*
    achieved: float       # max |residual| of the returned coefficients
    residuals: np.ndarray


def minimax_fit(values, basis: Basis, E: SampleSet) -> MinimaxFit:
    """Best uniform approximation of the data over span(basis) on E.

    Solves min t s.t. -t <= f_j - (Bc)_j <= t over the sample points.
    """
    f = np.asarray(values, dtype=float)
    if f.shape != (E.npts,):
        raise ValueError(f"got {f.shape} values for {E.npts} points")
    B = basis.design_matrix(E.points)
    nb = basis.size
    rows = []
    for j in range(E.npts):
        rows.append((np.concatenate([B[j], [-1.0]]), "<=", f[j]))
        rows.append((np.concatenate([-B[j], [-1.0]]), "<=", -f[j]))
    prob = LPProblem(
        objective=np.concatenate([np.zeros(nb), [1.0]]),
        rows=rows,
        bounds=[(None, None)] * nb + [(0, None)],
    )
    sol = solve_lp(prob)
    if sol.status != "optimal":
        raise LPFailureError(f"minimax LP ended with status {sol.status}")
    c = sol.x[:nb]
    residuals = f - B @ c
    return MinimaxFit(c, float(sol.value), float(np.max(np.abs(residuals))), residuals)


# -- functional maximization -----------------------------------------------------


def functional_max(functional, basis: Basis, E: SampleSet) -> float:
    """max |functional . c| over {c : |(Bc)_j| <= 1 for all sample points}.

    The feasible set is symmetric, so the maximum of the absolute value is
    the larger of the maxima for the functional and its negation; both are
    solved and the larger returned.
    """
    phi = np.asarray(functional, dtype=float)
    if phi.shape != (basis.size,):
        raise ValueError(f"functional has shape {phi.shape}, basis size {basis.size}")
    B = basis.design_matrix(E.points)
    best = -np.inf
    for sign in (1.0, -1.0):
        rows = []
        for j in range(E.npts):
            rows.append((B[j], "<=", 1.0))
            rows.append((-B[j], "<=", 1.0))
        prob = LPProblem(objective=sign * phi, rows=rows, maximize=True)
        sol = solve_lp(prob)
        if sol.status == "unbounded":
            raise DegenerateBasisError(
                "functional maximization unbounded: a basis element vanishes "
                "identically on the sample set (degenerate restriction)"
            )
        if sol.status != "optimal":
            raise LPFailureError(f"functional LP ended with status {sol.status}")
        best = max(best, sol.value)
    return float(best)


@dataclass
class BatchMaxResult:
    value: float
    objective_index: int
    witness: np.ndarray   # coefficients, normalized to unit discrete sup norm
    lp_count: int


def _dual_point_lp(BT_split, cobj, phi, cap):
    # presolve is pure overhead for these small dense equality systems
    res = linprog(
        cobj,
        A_eq=BT_split,
        b_eq=phi,
        bounds=[(0, None)] * BT_split.shape[1],
        method="highs",
        options=dict(_HIGHS_OPTIONS, maxiter=cap, presolve=False),
    )
    return res


def max_functional_batch(B: np.ndarray, Phi: np.ndarray) -> BatchMaxResult:
    """Exact max over rows phi of Phi of max { phi . c : ||Bc||_inf <= 1 }.

    Solves the dual min-l1 problem per undominated row, pruning rows whose
    certified upper bound (any solution of B^T w = phi) falls below a value
    already achieved by a feasible witness polynomial.  The result equals
    the exhaustive per-row maximum to solver accuracy.
    """
    B = np.asarray(B, dtype=float)
    Phi_full = np.atleast_2d(np.asarray(Phi, dtype=float))
    npts, nb = B.shape
    cap = ITERATION_CAP_FACTOR * (nb + 2 * npts)

    # the feasible set is symmetric, so phi and -phi share an optimum;
    # canonicalize signs and drop exact duplicate rows before solving
    canon = Phi_full.copy()
    for row in canon:
        nz = np.nonzero(row)[0]
        if len(nz) and row[nz[0]] < 0:
            row *= -1.0
    _, uniq_idx = np.unique(canon, axis=0, return_index=True)
    first_original = np.sort(uniq_idx)  # first occurrences, original order
    Phi = canon[first_original]
    nobj = len(Phi)

    # least-squares dual points: valid upper bounds by weak duality
    gram = B.T @ B
    try:
        W = B @ np.linalg.solve(gram, Phi.T)
    except np.linalg.LinAlgError:
        W, *_ = np.linalg.lstsq(B.T, Phi.T, rcond=None)
    # a bound is only valid where the equality B^T w = phi actually holds
    resid = np.max(np.abs(B.T @ W - Phi.T), axis=0)
    UB = np.abs(W).sum(axis=0)
    UB = np.where(resid <= 1e-7 * (1 + np.abs(Phi).max()), UB, np.inf)

    BT_split = np.hstack([B.T, -B.T])
    cobj = np.ones(2 * npts)
    best = 0.0
    best_idx = -1
    witness = np.zeros(nb)
    lp_count = 0
    slack = 1e-9
    solved = np.zeros(nobj, dtype=bool)

    def raise_with(c):
        nonlocal best, best_idx, witness
        zn = np.max(np.abs(B @ c))
        if zn <= 0:
            return
        cw = c / zn
        vals = np.abs(Phi @ cw)
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            best_idx = j
            witness = cw

    # cheap warm start: random feasible polynomials raise the incumbent so
    # the first pruning pass already discards most objective points
    warm = np.random.default_rng(0).normal(size=(nb, 64))
    wn = np.max(np.abs(B @ warm), axis=0)
    wn[wn == 0] = 1.0
    per_candidate = np.max(np.abs(Phi @ (warm / wn)), axis=0)
    cand = int(np.argmax(per_candidate))
    raise_with(warm[:, cand] / wn[cand])

    while True:
        active = np.where(~solved & (UB > best + slack * max(1.0, best)))[0]
        if len(active) == 0:
            break
        i = active[np.argmax(UB[active])]
        res = _dual_point_lp(BT_split, cobj, Phi[i], cap)
        lp_count += 1
        solved[i] = True
        if res.status == 2:
            raise DegenerateBasisError(
                "dual system infeasible: the functional is not represented on "
                "the sample set (a basis element vanishes identically on it)"
            )
        if res.status != 0:
            raise LPFailureError(f"dual LP failed with HiGHS status {res.status}")
        UB[i] = min(UB[i], res.fun)
        marg = res.eqlin.marginals
        if marg is not None:
            raise_with(np.asarray(marg, dtype=float))
        if res.fun > best:
            # even without a usable witness the LP optimum itself is attained
            best = float(res.fun)
            best_idx = i
        # support propagation: reuse the solved vertex's support to refresh
        # all upper bounds with one batched least-squares solve
        w = res.x[:npts] - res.x[npts:]
        support = np.argsort(-np.abs(w), kind="stable")[: min(nb, npts)]
        sub = B.T[:, support]
        ws, *_ = np.linalg.lstsq(sub, Phi.T, rcond=1e-12)
        ok = np.max(np.abs(sub @ ws - Phi.T), axis=0) <= 1e-9 * (1 + np.abs(Phi).max())
        cand = np.abs(ws).sum(axis=0)
        UB = np.where(ok, np.minimum(UB, cand), UB)
    orig_idx = int(first_original[best_idx]) if best_idx >= 0 else -1
    return BatchMaxResult(float(best), orig_idx, witness, lp_count)
