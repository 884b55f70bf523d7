"""Discretization of compact sets on and around algebraic hypersurfaces.

A compact subset E of the surface x_k^d = sum Q_i(y) x_k^i is described by
branch functions x_k = phi(y) over a union of axis-aligned boxes in y-space
and discretized on Chebyshev (Gauss-Lobatto) parameter grids, which keeps
sup norms of moderate-degree polynomials accurate at modest densities
(rule of thumb: density at least 8x the working degree).

Also provides coordinate projections pi(E), radius-r fattenings E_r,
discrete sup norms with maximizer witnesses, a doubled-density grid
certification check, and smooth cutoff (bump) functions built from the
flat-at-endpoints exponential profile.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .polyring import MultiPoly, VarietyRelation

DEFAULT_MEMBERSHIP_TOL = 1e-9
DEDUP_DECIMALS = 12          # points equal after rounding here are merged
INFLATE_SEED = 424242        # fixed seed: fattened sets are reproducible
GRID_FLAG_THRESHOLD = 1e-2   # refine_check change above this flags the grid


class GeometryError(ValueError):
    """Invalid set description (empty domain, branch undefined, ...)."""


# -- branch catalogue -------------------------------------------------------


@dataclass(frozen=True)
class Branch:
    """One x_k fiber branch over the parameter domain.

    kind:
      "zero"  -> x_k = 0
      "sqrt"  -> x_k = sign * sqrt(poly(y)), needs poly >= 0 on the domain
      "cbrt"  -> x_k = real cube root of poly(y)
      "roots" -> all real roots of the degree-d fiber equation, per sample
    ``poly`` is stored in the full variable list with zero x_k exponent.
    """

    kind: str
    sign: int = 1
    poly: Optional[MultiPoly] = None

    def __post_init__(self):
        if self.kind not in ("zero", "sqrt", "cbrt", "roots"):
            raise GeometryError(f"unknown branch kind {self.kind!r}")
        if self.kind in ("sqrt", "cbrt") and self.poly is None:
            raise GeometryError(f"branch kind {self.kind!r} needs a polynomial")
        if self.sign not in (-1, 1):
            raise GeometryError("branch sign must be +1 or -1")


@dataclass(frozen=True)
class BranchSpec:
    """Branches plus a finite union of axis-aligned boxes in y-space.

    A box is a tuple of (lo, hi) pairs, one per y variable (the variable
    list with x_k removed, in increasing index order).
    """

    branches: tuple
    boxes: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "boxes", tuple(tuple(tuple(map(float, ab)) for ab in box) for box in self.boxes))
        if not self.branches:
            raise GeometryError("branch list is empty")
        if not self.boxes:
            raise GeometryError("empty domain: no boxes")
        ylen = len(self.boxes[0])
        for b, box in enumerate(self.boxes):
            if len(box) != ylen:
                raise GeometryError(f"box {b} has {len(box)} axes, expected {ylen}")
            for a, (lo, hi) in enumerate(box):
                if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
                    raise GeometryError(f"box {b} axis {a} has invalid bounds [{lo}, {hi}]")

    @property
    def ydim(self) -> int:
        return len(self.boxes[0])


# -- sample sets -------------------------------------------------------------


@dataclass
class SampleSet:
    """A discretized compact set: points, membership tolerance, provenance.

    provenance is one of "on-variety", "projection", "inflated", "box"
    ("box" covers plain box discretizations used for classical interval
    experiments and evaluation grids).  ``source`` keeps enough metadata
    to resample at a different density where that makes sense.
    """

    points: np.ndarray
    tol: float
    provenance: str
    source: object = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise GeometryError("sample set must be a non-empty (m, dim) array")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("sample points must be finite")
        self.points = pts

    @property
    def npts(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def bounds(self) -> np.ndarray:
        """Per-axis (lo, hi) array of shape (dim, 2)."""
        return np.column_stack([self.points.min(axis=0), self.points.max(axis=0)])

    def to_csv(self, path):
        """One point per row, fixed 17-significant-digit formatting."""
        with open(path, "w") as fh:
            for row in self.points:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


@dataclass(frozen=True)
class VarietySource:
    rel: VarietyRelation
    spec: BranchSpec
    density: float


@dataclass(frozen=True)
class BoxSource:
    boxes: tuple
    density: float


def chebyshev_nodes(lo: float, hi: float, count: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes on [lo, hi], endpoints included, ascending."""
    if count < 2:
        return np.array([0.5 * (lo + hi)])
    theta = np.pi * np.arange(count) / (count - 1)
    u = np.cos(theta)[::-1]
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * u


def _axis_count(lo: float, hi: float, density: float) -> int:
    return max(2, int(np.ceil(density * (hi - lo))) + 1)


def _box_grid(box, density) -> np.ndarray:
    axes = [chebyshev_nodes(lo, hi, _axis_count(lo, hi, density)) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _dedup(points: np.ndarray) -> np.ndarray:
    seen = {}
    for row in points:
        key = tuple(np.round(row, DEDUP_DECIMALS))
        if key not in seen:
            seen[key] = row
    return np.array(list(seen.values()))


def _lift(ypts: np.ndarray, k0: int, xk) -> np.ndarray:
    out = np.insert(ypts, k0, 0.0, axis=1)
    out[:, k0] = xk
    return out


def sample_variety_set(
    rel: VarietyRelation,
    spec: BranchSpec,
    density: float,
    tol: float = DEFAULT_MEMBERSHIP_TOL,
) -> SampleSet:
    """Chebyshev-sample every branch over every box; verify membership.

    Every output point satisfies |x_k^d - sum Q_i(y) x_k^i| <= tol and
    duplicates (after rounding to 1e-12) are merged.
    """
    if density < 64:
        raise GeometryError(f"density {density} too low; need >= 64")
    if spec.ydim != rel.nvars - 1:
        raise GeometryError(
            f"branch spec has {spec.ydim} y-axes, relation needs {rel.nvars - 1}"
        )
    k0 = rel.k0
    chunks = []
    for b, box in enumerate(spec.boxes):
        ypts = _box_grid(box, density)
        lifted = _lift(ypts, k0, 0.0)
        for branch in spec.branches:
            if branch.kind == "zero":
                chunks.append(_lift(ypts, k0, 0.0))
            elif branch.kind == "sqrt":
                vals = branch.poly.evaluate_many(lifted)
                bad = vals < -1e-12
                if np.any(bad):
                    j = int(np.argmax(bad))
                    raise GeometryError(
                        f"sqrt branch undefined on box {b} {box}: "
                        f"radicand {vals[j]:.3e} < 0 at y={ypts[j]}"
                    )
                chunks.append(_lift(ypts, k0, branch.sign * np.sqrt(np.maximum(vals, 0.0))))
            elif branch.kind == "cbrt":
                vals = branch.poly.evaluate_many(lifted)
                chunks.append(_lift(ypts, k0, np.cbrt(vals)))
            elif branch.kind == "roots":
                rows = []
                for row in lifted:
                    coeffs = rel.fiber_coefficients(row)
                    roots = np.roots(coeffs)
                    scale = 1.0 + np.max(np.abs(coeffs))
                    for r in roots:
                        if abs(r.imag) <= 1e-9 * scale:
                            pt = row.copy()
                            pt[k0] = r.real
                            # near-multiple roots can be inaccurate; keep
                            # only points that pass the membership test
                            if rel.residual_many(pt.reshape(1, -1))[0] <= tol:
                                rows.append(pt)
                if rows:
                    chunks.append(np.array(rows))
    if not chunks:
        raise GeometryError("no sample points produced")
    pts = _dedup(np.vstack(chunks))
    res = rel.residual_many(pts)
    if np.any(res > tol):
        j = int(np.argmax(res))
        raise GeometryError(
            f"membership residual {res[j]:.3e} > tol {tol:g} at point {pts[j]}"
        )
    return SampleSet(pts, tol, "on-variety", VarietySource(rel, spec, density))


def sample_box(boxes, density: float, tol: float = DEFAULT_MEMBERSHIP_TOL) -> SampleSet:
    """Plain Chebyshev discretization of a union of boxes (no relation)."""
    boxes = tuple(tuple(tuple(map(float, ab)) for ab in box) for box in boxes)
    if not boxes:
        raise GeometryError("empty domain: no boxes")
    pts = _dedup(np.vstack([_box_grid(box, density) for box in boxes]))
    return SampleSet(pts, tol, "box", BoxSource(boxes, density))


def project_pi(E: SampleSet, k: int) -> SampleSet:
    """Delete coordinate k (1-based) from every point; merge duplicates.

    A single projection only: projecting an already-projected set is
    rejected so the y-coordinate bookkeeping stays unambiguous.
    """
    if E.provenance == "projection":
        raise GeometryError("set is already a projection; single projection only")
    if not 1 <= k <= E.dim:
        raise GeometryError(f"projection index {k} out of range 1..{E.dim}")
    pts = _dedup(np.delete(E.points, k - 1, axis=1))
    return SampleSet(pts, E.tol, "projection", ProjectionSource(E, k))


@dataclass(frozen=True)
class ProjectionSource:
    parent: SampleSet
    k: int


def inflate_set(
    E: SampleSet,
    radius: float,
    samples_per_point: int = 8,
    seed: int = INFLATE_SEED,
) -> SampleSet:
    """Sample the radius-r neighborhood of E (full-dimensional balls).

    Keeps the original points and adds ``samples_per_point`` offsets per
    point with Euclidean length <= radius, drawn with a fixed seed, so
    results are reproducible.  Violation checks against the fattened set
    are one-sided evidence: what is found is real.
    """
    if radius <= 0:
        raise GeometryError("inflation radius must be > 0")
    rng = np.random.default_rng(seed)
    n, dim = E.points.shape
    dirs = rng.normal(size=(n * samples_per_point, dim))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0] = 1.0
    dirs /= norms[:, None]
    radii = radius * rng.uniform(0, 1, size=n * samples_per_point) ** (1.0 / dim)
    offsets = dirs * radii[:, None]
    cloud = np.repeat(E.points, samples_per_point, axis=0) + offsets
    pts = np.vstack([E.points, cloud])
    return SampleSet(pts, E.tol, "inflated", InflateSource(E, radius, samples_per_point, seed))


@dataclass(frozen=True)
class InflateSource:
    parent: SampleSet
    radius: float
    samples_per_point: int
    seed: int


# -- sup norms and grid certification ----------------------------------------


@dataclass(frozen=True)
class NormWitness:
    value: float
    point: np.ndarray
    index: int


def sup_norm(p: MultiPoly, E: SampleSet) -> float:
    """max_j |p(x_j)| over the sample points."""
    return float(np.max(np.abs(p.evaluate_many(E.points))))


def sup_norm_witness(p: MultiPoly, E: SampleSet) -> NormWitness:
    """Sup norm together with its (first) maximizing sample point."""
    vals = np.abs(p.evaluate_many(E.points))
    j = int(np.argmax(vals))  # ties resolve to the lowest index
    return NormWitness(float(vals[j]), E.points[j].copy(), j)


def resample_doubled(E: SampleSet) -> SampleSet:
    """The same set rebuilt at twice the density (on-variety or box sets)."""
    src = E.source
    if isinstance(src, VarietySource):
        return sample_variety_set(src.rel, src.spec, 2 * src.density, E.tol)
    if isinstance(src, BoxSource):
        return sample_box(src.boxes, 2 * src.density, E.tol)
    raise GeometryError(f"cannot resample a set with provenance {E.provenance!r}")


def refine_check(p: MultiPoly, E: SampleSet) -> float:
    """Relative sup-norm change under a doubled-density resampling.

    Small change certifies the grid resolves p; change above
    GRID_FLAG_THRESHOLD means the original density is too coarse.
    """
    s1 = sup_norm(p, E)
    s2 = sup_norm(p, resample_doubled(E))
    denom = max(s1, s2, 1e-300)
    return abs(s2 - s1) / denom


@dataclass(frozen=True)
class GridCertificate:
    change: float
    ok: bool


def grid_certificate(p: MultiPoly, E: SampleSet) -> GridCertificate:
    change = refine_check(p, E)
    return GridCertificate(change, change <= GRID_FLAG_THRESHOLD)


# -- bump functions -----------------------------------------------------------


def _raw_profile(t):
    """exp(-1/t) extended by 0 for t <= 0 (flat-at-endpoint building block)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    g = _raw_profile(t)
    h = _raw_profile(1.0 - np.asarray(t, dtype=float))
    return g / (g + h)


@functools.lru_cache(maxsize=None)
def _profile_derivative_max(order: int) -> float:
    """max_t |d^order/dt^order smooth_step(t)| measured by finite differences."""
    if order == 0:
        return 1.0
    dt = 1e-3  # balances truncation vs rounding through 4 nested gradients
    t = np.arange(-0.02, 1.02, dt)
    vals = smooth_step(t)
    for _ in range(order):
        vals = np.gradient(vals, dt)
    return float(np.max(np.abs(vals)))


@dataclass
class BumpFunction:
    """Smooth cutoff: 1 within epsilon/4 of the base set, 0 beyond epsilon.

    Distance to the base set is the exact minimum over its sample points.
    The transition uses smooth_step on (epsilon - dist) / (3 epsilon / 4),
    so derivative bounds scale like C_order * epsilon^(-order) with C_order
    determined by the profile's measured derivative maxima.
    """

    base: SampleSet
    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise GeometryError("bump radius epsilon must be > 0")

    def distance(self, ypts) -> np.ndarray:
        ypts = np.atleast_2d(np.asarray(ypts, dtype=float))
        # exact distance to a finite set: min over base points
        d2 = (
            np.sum(ypts ** 2, axis=1)[:, None]
            - 2.0 * ypts @ self.base.points.T
            + np.sum(self.base.points ** 2, axis=1)[None, :]
        )
        return np.sqrt(np.maximum(d2.min(axis=1), 0.0))

    def evaluate_many(self, ypts) -> np.ndarray:
        dist = self.distance(ypts)
        s = (self.epsilon - dist) / (0.75 * self.epsilon)
        return smooth_step(s)

    def __call__(self, y):
        arr = np.asarray(y, dtype=float)
        if arr.ndim == 1:
            return float(self.evaluate_many(arr.reshape(1, -1))[0])
        return self.evaluate_many(arr)

    def derivative_bound(self, order: int) -> float:
        """C_order * epsilon^(-order) from the profile's derivative maxima."""
        if order < 0 or order > 4:
            raise GeometryError("derivative bound supported for orders 0..4")
        # 0.1% headroom covers the sampling error of the measured maxima
        c = _profile_derivative_max(order) * 1.001 * (4.0 / 3.0) ** order
        return c * self.epsilon ** (-order)


def bump_function_eval(h: BumpFunction, y) -> float:
    return h(np.asarray(y, dtype=float))


def bump_function_derivative_bound(h: BumpFunction, order: int) -> float:
    return h.derivative_bound(order)
