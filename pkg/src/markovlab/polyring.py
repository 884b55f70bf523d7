"""Sparse multivariate polynomial arithmetic and quotient-ring reduction.

A polynomial in N variables is stored as a map from exponent vectors
(length-N tuples of nonnegative ints) to float coefficients:

    x1^2 * x2 + 3  ->  {(2, 1): 1.0, (0, 0): 3.0}

The zero polynomial has an empty term map.  Coefficients below the prune
threshold (true zeros only) are dropped; everything else is kept, so
numerical correctness is enforced by point-wise tolerance tests downstream,
not by aggressive rounding.

The quotient structure comes from a single algebraic relation

    x_k^d = Q_0(y) + Q_1(y) x_k + ... + Q_{d-1}(y) x_k^{d-1}

where y collects the remaining variables.  ``reduce_to_normal_form``
rewrites any polynomial into the canonical representative

    G_0(y) + G_1(y) x_k + ... + G_{d-1}(y) x_k^{d-1}

by repeatedly eliminating the highest x_k power, which strictly decreases
at every step (a power m >= d is replaced by powers <= m - 1).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

# Prune threshold: removes true zeros (and denormal dust) only.  Cancellation
# residue around 1e-16 is deliberately kept; tests compare point values.
PRUNE_THRESHOLD = 1e-300

Exponent = tuple  # tuple[int, ...], one entry per variable


class DimensionMismatchError(ValueError):
    """Operands live in polynomial rings with different variable counts."""


def _canonical(terms: dict, nvars: int) -> dict:
    out = {}
    for exp, coeff in terms.items():
        if len(exp) != nvars:
            raise DimensionMismatchError(
                f"exponent {exp!r} has {len(exp)} entries, expected {nvars}"
            )
        if any(e < 0 or e != int(e) for e in exp):
            raise ValueError(f"exponents must be nonnegative integers, got {exp!r}")
        c = float(coeff)
        if abs(c) < PRUNE_THRESHOLD:
            continue
        key = tuple(int(e) for e in exp)
        c_new = out.get(key, 0.0) + c
        if abs(c_new) < PRUNE_THRESHOLD:
            out.pop(key, None)
        else:
            out[key] = c_new
    return out


def _grlex_key(exp: Exponent):
    return (sum(exp), exp)


class MultiPoly:
    """Immutable sparse polynomial with real coefficients.

    Instances should be treated as read-only; all operations return new
    polynomials.  Term order for display and serialization is graded
    lexicographic with x1 < x2 < ... < xN, highest terms first, so equal
    inputs always print identically.
    """

    __slots__ = ("terms", "nvars")

    def __init__(self, terms: dict, nvars: int):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        object.__setattr__(self, "nvars", int(nvars))
        object.__setattr__(self, "terms", _canonical(terms, int(nvars)))

    def __setattr__(self, name, value):
        raise AttributeError("MultiPoly is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "MultiPoly":
        return cls({}, nvars)

    @classmethod
    def constant(cls, nvars: int, value: float) -> "MultiPoly":
        return cls({(0,) * nvars: float(value)}, nvars)

    @classmethod
    def variable(cls, nvars: int, index: int) -> "MultiPoly":
        """The monomial x_index (1-based index)."""
        if not 1 <= index <= nvars:
            raise ValueError(f"variable index {index} out of range 1..{nvars}")
        exp = [0] * nvars
        exp[index - 1] = 1
        return cls({tuple(exp): 1.0}, nvars)

    # -- basic queries ------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        """Total degree; 0 for the zero polynomial by convention."""
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def max_power(self, index: int) -> int:
        """Largest exponent of variable x_index (1-based); 0 if absent."""
        if not self.terms:
            return 0
        j = index - 1
        return max(e[j] for e in self.terms)

    def coefficient_scale(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(c) for c in self.terms.values())

    def sorted_terms(self):
        """Terms in descending graded-lex order (deterministic)."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    # -- ring operations ----------------------------------------------

    def _check_same_ring(self, other: "MultiPoly"):
        if self.nvars != other.nvars:
            raise DimensionMismatchError(
                f"operands have {self.nvars} and {other.nvars} variables"
            )

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = MultiPoly.constant(self.nvars, other)
        self._check_same_ring(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) + c
        return MultiPoly(out, self.nvars)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = MultiPoly.constant(self.nvars, other)
        self._check_same_ring(other)
        out = dict(self.terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0.0) - c
        return MultiPoly(out, self.nvars)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return MultiPoly({e: -c for e, c in self.terms.items()}, self.nvars)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return MultiPoly(
                {e: c * float(other) for e, c in self.terms.items()}, self.nvars
            )
        self._check_same_ring(other)
        out = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                key = tuple(a + b for a, b in zip(ea, eb))
                out[key] = out.get(key, 0.0) + ca * cb
        return MultiPoly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if power < 0 or power != int(power):
            raise ValueError("only nonnegative integer powers are supported")
        result = MultiPoly.constant(self.nvars, 1.0)
        base = self
        power = int(power)
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- calculus and evaluation ---------------------------------------

    def differentiate(self, alpha) -> "MultiPoly":
        """Partial derivative D^alpha for a multi-index alpha (len N, >= 0).

        Coefficient multipliers are exact integer falling factorials, so a
        single float multiply per term is the only rounding step.
        """
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.nvars:
            raise DimensionMismatchError(
                f"multi-index length {len(alpha)} != nvars {self.nvars}"
            )
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index entries must be >= 0")
        out = {}
        for exp, c in self.terms.items():
            if any(e < a for e, a in zip(exp, alpha)):
                continue
            mult = 1
            for e, a in zip(exp, alpha):
                mult *= math.perm(e, a)
            key = tuple(e - a for e, a in zip(exp, alpha))
            out[key] = out.get(key, 0.0) + c * mult
        return MultiPoly(out, self.nvars)

    def evaluate(self, point) -> float:
        """Value at a single point, by iterated Horner evaluation.

        Horner is applied in a fixed variable order (highest index first,
        recursively), which keeps evaluation deterministic and stable.
        """
        pt = np.asarray(point, dtype=float)
        if pt.shape != (self.nvars,):
            raise DimensionMismatchError(
                f"point has shape {pt.shape}, expected ({self.nvars},)"
            )
        if not np.all(np.isfinite(pt)):
            raise ValueError("point coordinates must be finite")
        return float(self.evaluate_many(pt.reshape(1, -1))[0])

    def evaluate_many(self, points) -> np.ndarray:
        """Values at an (m, N) array of points (vectorized iterated Horner)."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.nvars:
            raise DimensionMismatchError(
                f"points have shape {pts.shape}, expected (m, {self.nvars})"
            )
        if not self.terms:
            return np.zeros(len(pts))
        cols = [pts[:, j] for j in range(self.nvars)]
        return _horner(self.terms, self.nvars - 1, cols, len(pts))

    __call__ = evaluate

    # -- variable surgery -----------------------------------------------

    def remove_variable(self, index: int) -> "MultiPoly":
        """Delete variable x_index (1-based); it must not occur in any term."""
        j = index - 1
        if self.max_power(index) != 0:
            raise ValueError(f"variable x{index} occurs with positive exponent")
        if self.nvars == 1:
            raise ValueError("cannot remove the only variable")
        out = {e[:j] + e[j + 1:]: c for e, c in self.terms.items()}
        return MultiPoly(out, self.nvars - 1)

    def insert_variable(self, index: int) -> "MultiPoly":
        """Add a fresh variable x_index (1-based slot) with zero exponent."""
        j = index - 1
        if not 0 <= j <= self.nvars:
            raise ValueError(f"insertion slot {index} out of range")
        out = {e[:j] + (0,) + e[j:]: c for e, c in self.terms.items()}
        return MultiPoly(out, self.nvars + 1)

    def __repr__(self):
        return f"MultiPoly({format_poly(self)!r}, nvars={self.nvars})"


def _horner(terms: dict, axis: int, cols, m: int):
    """Recursive sparse Horner over variable ``axis`` (descending index)."""
    if axis < 0:
        # only the empty exponent can remain
        return terms.get((), 0.0) * np.ones(m)
    groups: dict = {}
    for exp, c in terms.items():
        sub = groups.setdefault(exp[axis], {})
        key = exp[:axis]
        sub[key] = sub.get(key, 0.0) + c
    powers = sorted(groups, reverse=True)
    x = cols[axis]
    acc = _horner(groups[powers[0]], axis - 1, cols, m)
    prev = powers[0]
    for p in powers[1:]:
        acc = acc * x ** (prev - p) + _horner(groups[p], axis - 1, cols, m)
        prev = p
    if prev:
        acc = acc * x ** prev
    return acc


# -- spec-level operation aliases ---------------------------------------


def arithmetic(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    """Exact term-wise / convolution arithmetic: op in {'add', 'sub', 'mul'}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def differentiate(p: MultiPoly, alpha) -> MultiPoly:
    return p.differentiate(alpha)


def evaluate(p: MultiPoly, point) -> float:
    return p.evaluate(point)


def degree(p: MultiPoly) -> int:
    """Total degree with deg(0) := 0; ratio formulas guard the zero case."""
    return p.total_degree()


# -- the algebraic relation ---------------------------------------------


@dataclass(frozen=True)
class VarietyRelation:
    """Data of the relation x_k^d = Q_0(y) + ... + Q_{d-1}(y) x_k^{d-1}.

    ``k`` is the 1-based index of the distinguished variable, ``d >= 2``
    the relation degree, and each Q_i a polynomial (in the full variable
    list) with zero exponent in x_k.
    """

    nvars: int
    k: int
    d: int
    q: tuple

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("relation degree d must be >= 2 (d = 1 is a graph)")
        if not 1 <= self.k <= self.nvars:
            raise ValueError(f"distinguished index k={self.k} out of range")
        if len(self.q) != self.d:
            raise ValueError(f"need d={self.d} coefficient polynomials, got {len(self.q)}")
        object.__setattr__(self, "q", tuple(self.q))
        for i, qi in enumerate(self.q):
            if qi.nvars != self.nvars:
                raise DimensionMismatchError(f"Q_{i} has nvars={qi.nvars}, expected {self.nvars}")
            if qi.max_power(self.k) != 0:
                raise ValueError(f"Q_{i} must not involve the distinguished variable x{self.k}")

    @property
    def k0(self) -> int:
        """0-based index of the distinguished variable."""
        return self.k - 1

    def y_indices(self):
        """0-based indices of the y variables (all but x_k)."""
        return [j for j in range(self.nvars) if j != self.k0]

    def xk_monomial(self, power: int) -> MultiPoly:
        exp = [0] * self.nvars
        exp[self.k0] = power
        return MultiPoly({tuple(exp): 1.0}, self.nvars)

    def residual_many(self, points) -> np.ndarray:
        """|x_k^d - sum Q_i(y) x_k^i| at each point (membership test)."""
        pts = np.asarray(points, dtype=float)
        xk = pts[:, self.k0]
        acc = xk ** self.d
        for i, qi in enumerate(self.q):
            if qi.is_zero():
                continue
            acc = acc - qi.evaluate_many(pts) * xk ** i
        return np.abs(acc)

    def fiber_coefficients(self, ypoint_lifted) -> np.ndarray:
        """Monic fiber polynomial coefficients [t^d, ..., t, 1] at one y.

        ``ypoint_lifted`` is a full N-vector (the x_k slot is ignored).
        """
        pt = np.asarray(ypoint_lifted, dtype=float).reshape(1, -1)
        coeffs = np.zeros(self.d + 1)
        coeffs[0] = 1.0
        for i, qi in enumerate(self.q):
            coeffs[self.d - i] = -float(qi.evaluate_many(pt)[0])
        return coeffs


@dataclass(frozen=True)
class NormalForm:
    """Canonical representative G_0(y) + G_1(y) x_k + ... + G_{d-1}(y) x_k^{d-1}.

    Each G_i is stored in the full variable list with zero x_k exponent.
    Reducing the reassembled polynomial again performs no rewrite steps,
    so reduction is idempotent term for term.
    """

    g: tuple
    relation: VarietyRelation

    def __post_init__(self):
        if len(self.g) != self.relation.d:
            raise ValueError("need one coefficient polynomial per x_k power 0..d-1")
        object.__setattr__(self, "g", tuple(self.g))
        for i, gi in enumerate(self.g):
            if gi.max_power(self.relation.k) != 0:
                raise ValueError(f"G_{i} involves the distinguished variable")

    def reassemble(self) -> MultiPoly:
        acc = MultiPoly.zero(self.relation.nvars)
        for i, gi in enumerate(self.g):
            if gi.is_zero():
                continue
            acc = acc + gi * self.relation.xk_monomial(i)
        return acc

    def evaluate_many(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        xk = pts[:, self.relation.k0]
        acc = np.zeros(len(pts))
        for i, gi in enumerate(self.g):
            if gi.is_zero():
                continue
            acc = acc + gi.evaluate_many(pts) * xk ** i
        return acc


def reduce_to_normal_form(p: MultiPoly, rel: VarietyRelation) -> NormalForm:
    """Rewrite p modulo the relation until its x_k degree is below d.

    Always eliminates the single highest x_k power first, so the term-level
    output is reproducible.  Terminates because every application of
    x_k^d -> sum Q_i x_k^i lowers the maximal x_k exponent by at least one.
    """
    if p.nvars != rel.nvars:
        raise DimensionMismatchError(f"polynomial has nvars={p.nvars}, relation {rel.nvars}")
    k0 = rel.k0
    work = dict(p.terms)
    while work:
        mdeg = max(e[k0] for e in work)
        if mdeg < rel.d:
            break
        top = [(e, c) for e, c in work.items() if e[k0] == mdeg]
        for e, _ in top:
            del work[e]
        for e, c in top:
            for i, qi in enumerate(rel.q):
                for eq, cq in qi.terms.items():
                    ne = list(a + b for a, b in zip(e, eq))
                    ne[k0] = mdeg - rel.d + i
                    key = tuple(ne)
                    cnew = work.get(key, 0.0) + c * cq
                    if abs(cnew) < PRUNE_THRESHOLD:
                        work.pop(key, None)
                    else:
                        work[key] = cnew
    return extract_coefficients(MultiPoly(work, rel.nvars), rel)


def extract_coefficients(p: MultiPoly, rel: VarietyRelation) -> NormalForm:
    """Recover G_0..G_{d-1} from a polynomial of x_k degree < d.

    Follows the successive-differentiation construction: G_i is the i-th
    x_k derivative of the remaining part divided by i!, then G_i x_k^i is
    subtracted before the next step.  The combined multiplier per term is
    the exact integer binomial C(e_k, i), and on the surviving terms it is
    C(i, i) = 1, so the result agrees with syntactic collection exactly.
    """
    if p.nvars != rel.nvars:
        raise DimensionMismatchError(f"polynomial has nvars={p.nvars}, relation {rel.nvars}")
    k0 = rel.k0
    if p.max_power(rel.k) >= rel.d:
        raise ValueError(
            f"x{rel.k} degree {p.max_power(rel.k)} >= d={rel.d}; reduce first"
        )
    residual = dict(p.terms)
    g = [None] * rel.d
    for i in range(rel.d - 1, -1, -1):
        gi = {}
        for exp, c in residual.items():
            if exp[k0] < i:
                continue
            key = list(exp)
            key[k0] = 0
            key = tuple(key)
            gi[key] = gi.get(key, 0.0) + c * math.comb(exp[k0], i)
        g[i] = MultiPoly(gi, rel.nvars)
        # exact back-substitution: the extracted terms cancel bit for bit
        for exp, c in gi.items():
            key = list(exp)
            key[k0] = i
            key = tuple(key)
            rnew = residual.get(key, 0.0) - c
            if rnew == 0.0:
                residual.pop(key, None)
            else:
                residual[key] = rnew
    return NormalForm(tuple(g), rel)


# -- text format ----------------------------------------------------------

_TERM_FACTOR = re.compile(r"^x(\d+)(?:\^(\d+))?$")


class PolyParseError(ValueError):
    """Raised when polynomial text does not match the wire format."""


def format_poly(p: MultiPoly) -> str:
    """Render in the text format ``c * x1^a1 * ... * xN^aN`` (graded-lex).

    Zero-exponent factors are omitted; coefficients use shortest round-trip
    float repr, so formatting is bit-reproducible for identical inputs.
    """
    if not p.terms:
        return "0"
    parts = []
    for exp, c in p.sorted_terms():
        factors = [repr(c)]
        for j, e in enumerate(exp):
            if e:
                factors.append(f"x{j + 1}^{e}")
        parts.append(" * ".join(factors))
    return " + ".join(parts)


def parse_poly(text: str, nvars: int | None = None) -> MultiPoly:
    """Parse the text format; whitespace-insensitive.

    Accepts terms joined by ``+``/``-``; each term is ``*``-separated
    factors that are numeric literals, ``xJ`` or ``xJ^A``.  If ``nvars``
    is omitted it is inferred from the highest variable index.
    """
    compact = text.replace(" ", "").replace("\t", "")
    if not compact:
        raise PolyParseError("empty polynomial text")
    # split into signed terms at top level
    chunks = []
    start = 0
    for i, ch in enumerate(compact):
        if ch in "+-" and i > start and compact[i - 1] not in "eE*^+-":
            chunks.append(compact[start:i])
            start = i
    chunks.append(compact[start:])

    raw_terms = []
    max_var = 0
    for chunk in chunks:
        body = chunk
        sign = 1.0
        while body and body[0] in "+-":
            if body[0] == "-":
                sign = -sign
            body = body[1:]
        if not body:
            raise PolyParseError(f"dangling sign in term {chunk!r}")
        coeff = sign
        exps: dict[int, int] = {}
        for factor in body.split("*"):
            if not factor:
                raise PolyParseError(f"empty factor in term {chunk!r}")
            m = _TERM_FACTOR.match(factor)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise PolyParseError(f"variable index must be >= 1 in {factor!r}")
                exps[idx] = exps.get(idx, 0) + int(m.group(2) or 1)
                max_var = max(max_var, idx)
            else:
                try:
                    coeff *= float(factor)
                except ValueError:
                    raise PolyParseError(
                        f"factor {factor!r} is neither a number nor xJ^A"
                    ) from None
        raw_terms.append((coeff, exps))

    n = nvars if nvars is not None else max(max_var, 1)
    if max_var > n:
        raise PolyParseError(f"variable x{max_var} exceeds nvars={n}")
    terms: dict = {}
    for coeff, exps in raw_terms:
        key = tuple(exps.get(j + 1, 0) for j in range(n))
        terms[key] = terms.get(key, 0.0) + coeff
    return MultiPoly(terms, n)
