"""Constructive smooth extension of a function given on a surface set.

Given metric projections P_l = sum_i G_{l,i}(y) x_k^i of a target on E and
bump functions h_l supported near pi(E) with radii eps_l = 1 / l^r, the
model evaluates the telescoping sum

    f~(x) = sum_i [ G_{0,i}(y) + sum_{l=1..L} h_l(y) (G_{l,i}(y) - G_{l-1,i}(y)) ] x_k^i.

On the samples of pi(E) every bump equals 1, so f~ agrees with P_L on E;
at points with dist(y, pi(E)) beyond the largest radius every bump
vanishes and f~ collapses to the reassembled P_0.  Rapid decrease of the
projection errors is what makes the derivative sums stabilize; the
diagnostics here measure that stabilization rather than certify it to all
orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .approx import ApproxSeries
from .geometry import BumpFunction, SampleSet, project_pi
from .polyring import NormalForm, VarietyRelation

FD_STEP = 1e-5  # central-difference step; balanced for orders <= 2


@dataclass
class ExtensionModel:
    rel: VarietyRelation
    base: SampleSet              # pi(E), the bump base set
    forms: list                  # NormalForm P_l for l = 0..L
    diffs: list                  # diffs[l][i] = G_{l,i} - G_{l-1,i}, l = 1..L
    bumps: list                  # bumps[l-1] has radius 1 / l^r
    r: int
    L: int

    @property
    def epsilons(self) -> list:
        return [b.epsilon for b in self.bumps]


def build_extension(series: ApproxSeries, r: int, L: int) -> ExtensionModel:
    """Assemble the gluing model from the first L + 1 projections.

    ``r`` is the bump-radius exponent (take the fitted derivative-growth
    exponent rounded up); the series window must reach level L.
    """
    if r < 1 or r != int(r):
        raise ValueError("r must be an integer >= 1")
    if series.rel is None:
        raise ValueError("extension needs a relation-based series")
    levels = set(series.levels.tolist())
    if not set(range(L + 1)) <= levels:
        raise ValueError(f"series window misses levels {sorted(set(range(L + 1)) - levels)}")
    rel = series.rel
    forms = [series.entry(l).normal_form for l in range(L + 1)]
    if any(f is None for f in forms):
        raise ValueError("series entries carry no normal forms")
    diffs = []
    for l in range(1, L + 1):
        diffs.append(tuple(
            forms[l].g[i] - forms[l - 1].g[i] for i in range(rel.d)
        ))
    base = project_pi(series.E, rel.k)
    bumps = [BumpFunction(base, 1.0 / float(l) ** r) for l in range(1, L + 1)]
    return ExtensionModel(rel, base, forms, diffs, bumps, int(r), int(L))


def evaluate_extension_many(model: ExtensionModel, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != model.rel.nvars:
        raise ValueError(f"points have shape {pts.shape}, expected (m, {model.rel.nvars})")
    rel = model.rel
    ypts = np.delete(pts, rel.k0, axis=1)
    hvals = [b.evaluate_many(ypts) for b in model.bumps]
    xk = pts[:, rel.k0]
    total = np.zeros(len(pts))
    for i in range(rel.d):
        acc = model.forms[0].g[i].evaluate_many(pts)
        for l in range(1, model.L + 1):
            delta = model.diffs[l - 1][i]
            if delta.is_zero():
                continue
            acc = acc + hvals[l - 1] * delta.evaluate_many(pts)
        total = total + acc * xk ** i
    return total


def evaluate_extension(model: ExtensionModel, point) -> float:
    pt = np.asarray(point, dtype=float).reshape(1, -1)
    return float(evaluate_extension_many(model, pt)[0])


def telescoped_form(model: ExtensionModel) -> NormalForm:
    """The model with every bump replaced by the constant 1.

    Coefficient-level telescoping: G_{0,i} + sum_l (G_{l,i} - G_{l-1,i})
    reconstructs G_{L,i} up to rounding of the float additions.
    """
    rel = model.rel
    g = []
    for i in range(rel.d):
        acc = model.forms[0].g[i]
        for l in range(1, model.L + 1):
            acc = acc + model.diffs[l - 1][i]
        g.append(acc)
    return NormalForm(tuple(g), rel)


# -- derivative seminorms -------------------------------------------------------


def _fd_multi_indices(nvars: int, nu: int):
    out = [tuple([0] * nvars)]
    if nu >= 1:
        for j in range(nvars):
            a = [0] * nvars
            a[j] = 1
            out.append(tuple(a))
    if nu >= 2:
        for j in range(nvars):
            a = [0] * nvars
            a[j] = 2
            out.append(tuple(a))
        for j in range(nvars):
            for t in range(j + 1, nvars):
                a = [0] * nvars
                a[j] = 1
                a[t] = 1
                out.append(tuple(a))
    return out


@dataclass
class DerivativeSeminorm:
    value: float
    per_alpha: dict
    skipped: list


def derivative_seminorm(model: ExtensionModel, K: SampleSet, nu: int) -> DerivativeSeminorm:
    """max over |alpha| <= nu of the finite-difference sup of D^alpha f~ on K.

    Central differences with step 1e-5; points where the stencil produces
    non-finite values are skipped and reported.
    """
    if nu < 0 or nu > 2:
        raise ValueError("nu must be 0, 1 or 2")
    pts = np.asarray(K.points, dtype=float)
    n = model.rel.nvars
    if pts.shape[1] != n:
        raise ValueError("evaluation set dimension does not match the model")
    h = FD_STEP
    per_alpha = {}
    skipped = []
    base_vals = evaluate_extension_many(model, pts)
    for alpha in _fd_multi_indices(n, nu):
        order = sum(alpha)
        if order == 0:
            vals = np.abs(base_vals)
        elif order == 1:
            j = alpha.index(1)
            up = pts.copy(); up[:, j] += h
            dn = pts.copy(); dn[:, j] -= h
            vals = np.abs(evaluate_extension_many(model, up) - evaluate_extension_many(model, dn)) / (2 * h)
        elif 2 in alpha:
            j = alpha.index(2)
            up = pts.copy(); up[:, j] += h
            dn = pts.copy(); dn[:, j] -= h
            vals = np.abs(
                evaluate_extension_many(model, up)
                - 2 * base_vals
                + evaluate_extension_many(model, dn)
            ) / (h * h)
        else:
            j = alpha.index(1)
            t = alpha.index(1, j + 1)
            pp = pts.copy(); pp[:, j] += h; pp[:, t] += h
            pm = pts.copy(); pm[:, j] += h; pm[:, t] -= h
            mp = pts.copy(); mp[:, j] -= h; mp[:, t] += h
            mm = pts.copy(); mm[:, j] -= h; mm[:, t] -= h
            vals = np.abs(
                evaluate_extension_many(model, pp)
                - evaluate_extension_many(model, pm)
                - evaluate_extension_many(model, mp)
                + evaluate_extension_many(model, mm)
            ) / (4 * h * h)
        finite = np.isfinite(vals)
        if not np.all(finite):
            skipped.extend(np.where(~finite)[0].tolist())
            vals = vals[finite]
        per_alpha[alpha] = float(np.max(vals)) if len(vals) else 0.0
    return DerivativeSeminorm(max(per_alpha.values()), per_alpha, sorted(set(skipped)))


# -- determining-set diagnostic ----------------------------------------------------


@dataclass
class DeterminingRow:
    alpha: tuple
    levels: np.ndarray
    norms: np.ndarray
    verdict: str  # "tends-to-zero" | "not-tends-to-zero"


def determining_diagnostic(series: ApproxSeries, rel: VarietyRelation, alphas) -> list:
    """For a target vanishing on E: does D^alpha P_l on E tend to zero?

    The input series are approximants of a function with ||f||_E <= 1e-9;
    per alpha the ladder ||D^alpha P_l||_E gets the verdict tends-to-zero
    when its last third is strictly decreasing and the final value dropped
    below 1e-4 of the ladder peak (the peak, not the first entry, so a
    derivative direction absent from early approximants cannot distort the
    reference; identically-zero ladders pass).
    """
    if series.values is None or float(np.max(np.abs(series.values))) > 1e-9:
        raise ValueError("target must vanish on the sample set (||f||_E <= 1e-9)")
    E = series.E
    rows = []
    levels = series.levels
    for alpha in alphas:
        alpha = tuple(int(a) for a in alpha)
        norms = []
        for e in series.entries:
            if e.normal_form is None:
                raise ValueError("series entries carry no polynomials")
            dpoly = e.normal_form.reassemble().differentiate(alpha)
            norms.append(float(np.max(np.abs(dpoly.evaluate_many(E.points)))))
        norms = np.array(norms)
        if np.all(norms <= 1e-12):
            verdict = "tends-to-zero"
        else:
            k = max(2, math.ceil(len(norms) / 3))
            tail = norms[-k:]
            decreasing = all(tail[i] > tail[i + 1] for i in range(len(tail) - 1))
            small = norms[-1] < 1e-4 * max(float(np.max(norms)), 1e-300)
            verdict = "tends-to-zero" if (decreasing and small) else "not-tends-to-zero"
        rows.append(DeterminingRow(alpha, levels.copy(), norms, verdict))
    return rows
