"""Metric projections onto the restricted family, decay diagnostics, and
the special functions behind the slow-set counterexample.

The counterexample lives on y^3 = 1 - x^2 over |x| <= 1/2: the polynomials

    P_n(x, y) = y - sum_{k<=n} c_k x^(2k),   c_0 = 1, c_{k+1} = c_k (k - 1/3)/(k + 1)

restrict on the surface to the tail of the cube-root series, so their sup
norms decay like 4^(-n) times algebraic factors while the y-derivative
stays exactly 1.  Norms are evaluated through the tail (never through the
monomial form, which cancels catastrophically), both by direct summation
and through the closed form

    x^(2n+2) Gamma(n + 2/3) F(1, n + 2/3; n + 2; x^2) / (Gamma(-1/3) Gamma(n + 2))

with the two routes cross-checked on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import thread_map
from .chebysolve import build_basis, minimax_fit
from .geometry import SampleSet
from .polyring import MultiPoly, NormalForm, VarietyRelation

# Gamma(-1/3), 17 significant digits; cross-checked against the reflection
# formula in the test suite.
GAMMA_MINUS_ONE_THIRD = -4.0623538182792442


class ConsistencyError(RuntimeError):
    """Two independent evaluation routes disagreed beyond tolerance."""


# -- metric projections --------------------------------------------------------


@dataclass
class ApproxEntry:
    level: int
    coefficients: Optional[np.ndarray]
    normal_form: Optional[NormalForm]
    error: float       # discrete best-approximation error (LP optimum)
    achieved: float    # max |residual| of the returned representative


@dataclass
class ApproxSeries:
    """Per-level best approximations of a point-value table on E."""

    E: SampleSet
    rel: Optional[VarietyRelation]
    values: Optional[np.ndarray]
    entries: list
    grading: str = "tensor"

    @property
    def levels(self) -> np.ndarray:
        return np.array([e.level for e in self.entries], dtype=int)

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.error for e in self.entries])

    def entry(self, level: int) -> ApproxEntry:
        for e in self.entries:
            if e.level == level:
                return e
        raise KeyError(level)

    def to_csv(self, path, r_ladder=()):
        with open(path, "w") as fh:
            head = "l,error" + "".join(f",l{r}_error" for r in r_ladder)
            fh.write(head + "\n")
            for e in self.entries:
                extra = "".join(
                    f",{float(e.level) ** r * e.error:.17g}" for r in r_ladder
                )
                fh.write(f"{e.level},{e.error:.17g}{extra}\n")


def metric_projection(values, rel, E, level, grading="tensor", basis=None):
    """Best uniform approximation from the level slice of the family.

    Returns (normal form, minimax fit); the fit error is the discrete
    distance of the data to the slice.
    """
    f = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("target values must be finite")
    if rel is not None and E.provenance not in ("on-variety",):
        raise ValueError("metric projection needs an on-variety sample set")
    if basis is None:
        basis = build_basis(E, level, rel=rel, grading=grading)
    fit = minimax_fit(f, basis, E)
    form = basis.to_normal_form(fit.coefficients) if rel is not None else None
    return form, fit


def projection_series(values, rel, E, level_max, grading="tensor") -> ApproxSeries:
    """Metric projections for levels 0..level_max (independent LP solves)."""
    f = np.asarray(values, dtype=float)

    def solve(level):
        form, fit = metric_projection(f, rel, E, level, grading=grading)
        return ApproxEntry(level, fit.coefficients, form, max(fit.error, 0.0), fit.achieved)

    entries = thread_map(solve, range(level_max + 1))
    return ApproxSeries(E, rel, f, list(entries), grading)


def series_from_normal_forms(values, E, forms, rel) -> ApproxSeries:
    """Wrap an externally supplied approximant sequence as a series.

    ``forms`` is a list of (level, NormalForm); errors are the directly
    evaluated sup norms ||f - P_l||_E.
    """
    f = np.asarray(values, dtype=float)
    entries = []
    for level, form in forms:
        resid = f - form.evaluate_many(E.points)
        err = float(np.max(np.abs(resid)))
        entries.append(ApproxEntry(int(level), None, form, err, err))
    entries.sort(key=lambda e: e.level)
    return ApproxSeries(E, rel, f, entries)


def series_from_errors(levels, errors) -> ApproxSeries:
    """Barebones series (no polynomials) for decay diagnostics."""
    entries = [
        ApproxEntry(int(l), None, None, float(d), float(d))
        for l, d in zip(levels, errors)
    ]
    entries.sort(key=lambda e: e.level)
    dummy = SampleSet(np.zeros((1, 1)), 1e-9, "box")
    return ApproxSeries(dummy, None, None, entries)


# -- seminorms and decay diagnostics ----------------------------------------------


@dataclass
class SeminormValue:
    value: float
    stale: bool  # True when the sup sits at the right edge of the window


def seminorm_delta(series: ApproxSeries, nu: int) -> SeminormValue:
    """sup_l l^nu d_l over the computed window (nu = -1: ||f||; nu = 0: d_0)."""
    if not series.entries:
        raise ValueError("empty series")
    if nu < -1:
        raise ValueError("nu must be >= -1")
    if nu == -1:
        if series.values is None:
            raise ValueError("series carries no target values")
        return SeminormValue(float(np.max(np.abs(series.values))), False)
    if nu == 0:
        return SeminormValue(series.entry(0).error, False)
    tail = [(e.level, e.error) for e in series.entries if e.level >= 1]
    if not tail:
        raise ValueError("no levels >= 1 in the series")
    vals = np.array([float(l) ** nu * d for l, d in tail])
    j = int(np.argmax(vals))
    return SeminormValue(float(vals[j]), j == len(vals) - 1)


@dataclass
class DecayRow:
    r: float
    levels: np.ndarray
    sequence: np.ndarray
    max_value: float
    verdict: str  # "decreasing-tail" | "inconclusive" | "growing"


@dataclass
class DecayDiagnostic:
    rows: list

    def verdict(self, r) -> str:
        for row in self.rows:
            if row.r == r:
                return row.verdict
        raise KeyError(r)


def _tail_verdict(seq: np.ndarray) -> str:
    """Fixed rule: strictly decreasing last ceil(window/3) values."""
    w = len(seq)
    k = max(2, math.ceil(w / 3))
    tail = seq[-k:]
    if all(tail[i] > tail[i + 1] for i in range(len(tail) - 1)):
        return "decreasing-tail"
    if all(tail[i] < tail[i + 1] for i in range(len(tail) - 1)):
        return "growing"
    return "inconclusive"


def decay_diagnostic_from_errors(levels, errors, r_ladder) -> DecayDiagnostic:
    levels = np.asarray(levels, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = levels >= 1
    levels, errors = levels[keep], errors[keep]
    if len(levels) < 12:
        raise ValueError(f"window length {len(levels)} < 12")
    rows = []
    for r in r_ladder:
        seq = levels ** float(r) * errors
        rows.append(DecayRow(float(r), levels.copy(), seq, float(np.max(seq)), _tail_verdict(seq)))
    return DecayDiagnostic(rows)


def rapid_decrease_diagnostic(series: ApproxSeries, r_ladder) -> DecayDiagnostic:
    """Per exponent r: the sequence l^r d_l and a tail verdict."""
    return decay_diagnostic_from_errors(series.levels, series.errors, r_ladder)


# -- Pochhammer and the hypergeometric series ---------------------------------------


def pochhammer(q: float, n: int) -> float:
    """Rising factorial (q)_n = q (q+1) ... (q+n-1); (q)_0 = 1."""
    if n < 0 or n != int(n):
        raise ValueError("n must be a nonnegative integer")
    if n > 500:
        raise ValueError("n > 500; use logpochhammer")
    out = 1.0
    for j in range(int(n)):
        out *= q + j
        if math.isinf(out):
            raise OverflowError(f"({q})_{n} overflows; use logpochhammer")
    return out


def logpochhammer(q: float, n: int) -> float:
    """log (q)_n for q > 0 (all factors positive)."""
    if q <= 0:
        raise ValueError("logpochhammer needs q > 0")
    if n < 0 or n != int(n):
        raise ValueError("n must be a nonnegative integer")
    return math.lgamma(q + n) - math.lgamma(q)


_2F1_TOL = 1e-16
_2F1_MAX_TERMS = 10 ** 5


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Hypergeometric series sum (a)_n (b)_n / (c)_n z^n / n! for |z| <= 1.

    At z = 1 the closed form Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b))
    applies and requires c - a - b > 0.
    """
    if c <= 0 and c == int(c):
        raise ValueError(f"c = {c} is a nonpositive integer")
    if abs(z) > 1:
        raise ValueError(f"|z| = {abs(z)} outside the unit disc")
    if z == 1.0:
        if c - a - b <= 0:
            raise ValueError(f"series at z=1 diverges: c-a-b = {c - a - b} <= 0")
        sign = 1.0
        logv = 0.0
        for arg in (c, c - a - b):
            v = math.lgamma(arg)
            logv += v
            sign *= math.copysign(1.0, math.gamma(arg)) if arg < 0 else 1.0
        for arg in (c - a, c - b):
            logv -= math.lgamma(arg)
            sign *= math.copysign(1.0, math.gamma(arg)) if arg < 0 else 1.0
        return sign * math.exp(logv)
    total = 0.0
    term = 1.0
    for n in range(_2F1_MAX_TERMS):
        total += term
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        if abs(term) < _2F1_TOL * max(abs(total), 1.0):
            return total + term
    raise ConsistencyError(
        f"hypergeometric series did not converge in {_2F1_MAX_TERMS} terms"
    )


def gamma_ratio(n: float, alpha: float) -> float:
    """Gamma(n + alpha) / (Gamma(n) n^alpha); exact for integer alpha >= 0."""
    if alpha == int(alpha) and 0 <= alpha <= 8:
        num = 1.0
        for j in range(int(alpha)):
            num *= (n + j) / n
        return num
    return math.exp(math.lgamma(n + alpha) - math.lgamma(n) - alpha * math.log(n))


@dataclass
class GammaRatioRow:
    n: int
    ratio: float
    envelope: float
    ok: bool


def gamma_ratio_limit_check(alpha: float, n_list) -> list:
    """Table of Gamma(n+alpha)/(Gamma(n) n^alpha) against a 1/n envelope.

    The envelope 2|alpha|(|alpha|+1)/n is asserted for n >= 50 (the signed
    variant would be vacuous for alpha in (-1, 0)).
    """
    if not -1 < alpha < 5:
        raise ValueError("alpha must lie in (-1, 5)")
    rows = []
    for n in n_list:
        n = int(n)
        if n > 10 ** 4:
            raise ValueError("n exceeds 1e4")
        ratio = gamma_ratio(float(n), alpha)
        env = 2.0 * abs(alpha) * (abs(alpha) + 1.0) / n
        ok = abs(ratio - 1.0) <= env
        if n >= 50 and not ok:
            raise ConsistencyError(
                f"gamma ratio envelope violated at n={n}: |{ratio} - 1| > {env}"
            )
        rows.append(GammaRatioRow(n, ratio, env, ok))
    return rows


# -- the counterexample family -----------------------------------------------------


def counterexample_coefficients(n: int) -> np.ndarray:
    """c_0..c_n with c_0 = 1, c_{k+1} = c_k (k - 1/3) / (k + 1).

    Mathematically the Gamma-quotient coefficients of the cube-root series;
    the recurrence is overflow- and cancellation-free.
    """
    if not 0 <= n <= 200:
        raise ValueError("n must lie in 0..200")
    return _coefficient_run(n)


def counterexample_poly(n: int) -> MultiPoly:
    """P_n(x, y) = y - sum_{k<=n} c_k x^(2k) in variables (x1, x2) = (x, y)."""
    coeffs = counterexample_coefficients(n)
    terms = {(0, 1): 1.0}
    for k, ck in enumerate(coeffs):
        terms[(2 * k, 0)] = terms.get((2 * k, 0), 0.0) - float(ck)
    return MultiPoly(terms, 2)


def _coefficient_run(kmax: int) -> np.ndarray:
    c = np.empty(kmax + 1)
    c[0] = 1.0
    for k in range(kmax):
        c[k + 1] = c[k] * (k - 1.0 / 3.0) / (k + 1.0)
    return c


def tail_direct(n: int, x: float, extra: int = 500) -> float:
    """sum_{k=n+1}^{n+extra} c_k x^(2k), summed small-to-large."""
    if abs(x) >= 1:
        raise ValueError("|x| must be < 1")
    coeffs = _coefficient_run(n + extra)
    x2 = x * x
    total = 0.0
    for k in range(n + extra, n, -1):
        total += coeffs[k] * x2 ** k
    return total


def tail_closed_form(n: int, x: float) -> float:
    """Closed form of the tail past index n at |x| < 1 (log-Gamma route)."""
    if not 0 <= n <= 200:
        raise ValueError("n must lie in 0..200")
    if abs(x) >= 1:
        raise ValueError("|x| must be < 1")
    if x == 0.0:
        return 0.0
    x2 = x * x
    hyp = gauss_2f1(1.0, 2.0 / 3.0 + n, 2.0 + n, x2)
    logmag = (
        math.lgamma(n + 2.0 / 3.0)
        - math.lgamma(n + 2.0)
        + (2 * n + 2) * math.log(abs(x))
        - math.log(abs(GAMMA_MINUS_ONE_THIRD))
    )
    # 1/Gamma(-1/3) < 0 while every other factor is positive
    return -math.exp(logmag) * hyp


_TAIL_AGREEMENT_RTOL = 1e-9


def _require_counterexample_set(E: SampleSet):
    from .geometry import VarietySource

    src = E.source
    if not isinstance(src, VarietySource):
        raise ValueError("sample set does not carry a variety source")
    rel = src.rel
    one_minus_x2 = MultiPoly({(0, 0): 1.0, (2, 0): -1.0}, 2)
    if not (
        rel.nvars == 2
        and rel.k == 2
        and rel.d == 3
        and rel.q[0] == one_minus_x2
        and rel.q[1].is_zero()
        and rel.q[2].is_zero()
    ):
        raise ValueError("sample set is not built on the cube-root relation")
    if np.max(np.abs(E.points[:, 0])) >= 1.0:
        raise ValueError("counterexample norms need |x| < 1")


def counterexample_norm(n: int, E: SampleSet) -> float:
    """||P_n||_E via the tail closed form, cross-checked against summation.

    Disagreement beyond 1e-9 relative raises; it is never silently passed.
    """
    _require_counterexample_set(E)
    xs = np.unique(np.round(np.abs(E.points[:, 0]), 15))
    best_closed = 0.0
    best_direct = 0.0
    for x in xs:
        c = abs(tail_closed_form(n, float(x)))
        d = abs(tail_direct(n, float(x)))
        best_closed = max(best_closed, c)
        best_direct = max(best_direct, d)
    if abs(best_closed - best_direct) > _TAIL_AGREEMENT_RTOL * max(best_closed, best_direct):
        raise ConsistencyError(
            f"tail routes disagree at n={n}: closed {best_closed:.17g} "
            f"vs direct {best_direct:.17g}"
        )
    return best_closed


# -- built-in targets -----------------------------------------------------------------


def _target_exp_xy(points: np.ndarray, rel: VarietyRelation) -> np.ndarray:
    """exp of the first free variable times the distinguished variable."""
    y_axes = rel.y_indices()
    return np.exp(points[:, y_axes[0]]) * points[:, rel.k0]


def _target_abs_x(points: np.ndarray, rel: VarietyRelation) -> np.ndarray:
    y_axes = rel.y_indices()
    return np.abs(points[:, y_axes[0]])


def _target_runge(points: np.ndarray, rel: VarietyRelation) -> np.ndarray:
    y_axes = rel.y_indices()
    return 1.0 / (1.0 + 25.0 * points[:, y_axes[0]] ** 2)


TARGETS: dict = {
    "exp-xy": _target_exp_xy,
    "abs-x": _target_abs_x,
    "runge": _target_runge,
}


def target_values(name: str, E: SampleSet, rel: VarietyRelation) -> np.ndarray:
    if name not in TARGETS:
        raise ValueError(f"unknown target {name!r}; choices: {sorted(TARGETS)}")
    return TARGETS[name](E.points, rel)
