import numpy as np
import pytest

from markovlab.geometry import (
    Branch,
    BranchSpec,
    BumpFunction,
    GeometryError,
    SampleSet,
    grid_certificate,
    inflate_set,
    project_pi,
    refine_check,
    sample_box,
    sample_variety_set,
    sup_norm,
    sup_norm_witness,
)
from markovlab.polyring import MultiPoly, VarietyRelation, parse_poly


def P(text, nvars=2):
    return parse_poly(text, nvars)


@pytest.fixture(scope="module")
def cubic_rel():
    return VarietyRelation(2, 2, 3, (MultiPoly.zero(2), P("1 + -1*x1^2"), MultiPoly.zero(2)))


@pytest.fixture(scope="module")
def three_branch_spec():
    g = P("1 + -1*x1^2")
    return BranchSpec(
        branches=(Branch("zero"), Branch("sqrt", 1, g), Branch("sqrt", -1, g)),
        boxes=(((-1.0, 1.0),),),
    )


@pytest.fixture(scope="module")
def cubic_E(cubic_rel, three_branch_spec):
    return sample_variety_set(cubic_rel, three_branch_spec, density=256)


@pytest.fixture(scope="module")
def cbrt_rel():
    return VarietyRelation(2, 2, 3, (P("1 + -1*x1^2"), MultiPoly.zero(2), MultiPoly.zero(2)))


# -- sampling ------------------------------------------------------------


def test_three_branch_sampling(cubic_rel, cubic_E):
    assert cubic_E.npts >= 512
    assert np.max(cubic_rel.residual_many(cubic_E.points)) <= 1e-10
    # duplicates merged: branch intersections at x = +-1 appear once
    key = {tuple(np.round(r, 12)) for r in cubic_E.points}
    assert len(key) == cubic_E.npts


def test_cbrt_branch_exact(cbrt_rel):
    spec = BranchSpec((Branch("cbrt", poly=P("1 + -1*x1^2")),), (((0.25, 0.5),),))
    E = sample_variety_set(cbrt_rel, spec, density=256)
    x = E.points[:, 0]
    assert np.all(np.abs(E.points[:, 1] - np.cbrt(1 - x ** 2)) <= 1e-12)


def test_roots_branch_matches_closed_form(cubic_rel, three_branch_spec):
    spec = BranchSpec((Branch("roots"),), (((-0.9, 0.9),),))
    E = sample_variety_set(cubic_rel, spec, density=64)
    closed = sample_variety_set(cubic_rel, three_branch_spec, density=256)
    assert np.max(cubic_rel.residual_many(E.points)) <= E.tol
    # each numeric point sits near one of the closed-form branches
    x, y = E.points[:, 0], E.points[:, 1]
    s = np.sqrt(1 - x ** 2)
    nearest = np.minimum(np.abs(y), np.minimum(np.abs(y - s), np.abs(y + s)))
    assert np.max(nearest) <= 1e-7


def test_empty_domain_rejected():
    with pytest.raises(GeometryError):
        BranchSpec((Branch("zero"),), ())


def test_sqrt_branch_negative_radicand_reports_box(cubic_rel):
    spec = BranchSpec((Branch("sqrt", 1, P("1 + -1*x1^2")),), (((1.5, 2.0),),))
    with pytest.raises(GeometryError, match="box 0"):
        sample_variety_set(cubic_rel, spec, density=64)


def test_low_density_rejected(cubic_rel, three_branch_spec):
    with pytest.raises(GeometryError):
        sample_variety_set(cubic_rel, three_branch_spec, density=32)


# -- projection ------------------------------------------------------------


def test_projection_of_three_branch_set_is_interval(cubic_E):
    proj = project_pi(cubic_E, 2)
    assert proj.dim == 1
    assert proj.npts == 513  # the x-grid; three branches collapse
    assert proj.points.min() == pytest.approx(-1.0)
    assert proj.points.max() == pytest.approx(1.0)


def test_projection_two_box_domain(cbrt_rel):
    spec = BranchSpec(
        (Branch("cbrt", poly=P("1 + -1*x1^2")),),
        (((-0.5, -0.25),), ((0.25, 0.5),)),
    )
    E = sample_variety_set(cbrt_rel, spec, density=256)
    proj = project_pi(E, 2)
    x = proj.points[:, 0]
    assert np.all((np.abs(x) >= 0.25 - 1e-12) & (np.abs(x) <= 0.5 + 1e-12))


def test_projection_singleton():
    E = SampleSet(np.array([[0.3, 0.7]]), 1e-9, "on-variety")
    proj = project_pi(E, 2)
    assert proj.npts == 1 and proj.points[0, 0] == pytest.approx(0.3)


def test_double_projection_rejected(cubic_E):
    proj = project_pi(cubic_E, 2)
    with pytest.raises(GeometryError):
        project_pi(proj, 1)


# -- inflation ---------------------------------------------------------------


def test_inflate_tiny_radius_preserves_sup(cubic_E):
    p = P("1*x1^3 + -0.25*x2^2")
    fat = inflate_set(cubic_E, 1e-9, samples_per_point=4)
    assert sup_norm(p, fat) == pytest.approx(sup_norm(p, cubic_E), abs=1e-7)


def test_inflate_singleton_inside_unit_ball():
    E = SampleSet(np.zeros((1, 2)), 1e-9, "on-variety")
    fat = inflate_set(E, 1.0, samples_per_point=500)
    assert np.all(np.linalg.norm(fat.points, axis=1) <= 1.0 + 1e-12)


def test_inflate_distance_bound(cubic_E):
    radius = 1.0 / 16.0
    fat = inflate_set(cubic_E, radius, samples_per_point=3)
    d2 = (
        np.sum(fat.points ** 2, axis=1)[:, None]
        - 2 * fat.points @ cubic_E.points.T
        + np.sum(cubic_E.points ** 2, axis=1)[None, :]
    )
    dist = np.sqrt(np.maximum(d2.min(axis=1), 0))
    assert np.max(dist) <= radius + 1e-12


def test_inflate_deterministic(cubic_E):
    a = inflate_set(cubic_E, 0.1, samples_per_point=2)
    b = inflate_set(cubic_E, 0.1, samples_per_point=2)
    assert np.array_equal(a.points, b.points)


# -- sup norms -----------------------------------------------------------------


def test_sup_norm_identity_on_interval():
    E = sample_box((((-1.0, 1.0),),), density=256)
    w = sup_norm_witness(P("1*x1", 1), E)
    assert w.value == pytest.approx(1.0)
    assert abs(w.point[0]) == pytest.approx(1.0)


def test_sup_norm_parabola_attains_at_zero():
    E = sample_box((((-1.0, 1.0),),), density=256)
    # 513 CGL nodes include x = 0 exactly
    assert sup_norm(P("1 + -1*x1^2", 1), E) == pytest.approx(1.0, abs=1e-12)


def test_sup_norm_chebyshev_t8():
    E = sample_box((((-1.0, 1.0),),), density=256)
    t8 = P("128*x1^8 + -256*x1^6 + 160*x1^4 + -32*x1^2 + 1", 1)
    assert sup_norm(t8, E) == pytest.approx(1.0, abs=1e-6)


def test_sup_norm_monotone_under_inclusion(cubic_E):
    rng = np.random.default_rng(8)
    sub = SampleSet(cubic_E.points[rng.permutation(cubic_E.npts)[:100]], cubic_E.tol, "on-variety")
    for _ in range(20):
        terms = {
            (int(rng.integers(0, 5)), int(rng.integers(0, 3))): float(rng.uniform(-1, 1))
            for _ in range(6)
        }
        p = MultiPoly(terms, 2)
        assert sup_norm(p, sub) <= sup_norm(p, cubic_E) + 1e-15


# -- refinement check ------------------------------------------------------------


def test_refine_constant_no_change(cubic_E):
    assert refine_check(MultiPoly.constant(2, 3.0), cubic_E) == 0.0


def test_refine_low_degree_certified(cubic_E):
    p = P("1*x1^5 + 0.5*x1^2*x2^2 + -1*x2")
    cert = grid_certificate(p, cubic_E)
    assert cert.change <= 1e-4 and cert.ok


def test_refine_flags_aliased_polynomial():
    # T_26 - T_6 vanishes at every node cos(j pi / 16) of the 17-point grid
    # (26 = 32 - 6 aliases onto 6) but oscillates with amplitude ~2 between
    # nodes, so the doubled grid reveals a large sup-norm change.
    def cheb(n):
        x = MultiPoly.variable(1, 1)
        a, b = MultiPoly.constant(1, 1.0), x
        for _ in range(n - 1):
            a, b = b, 2.0 * x * b - a
        return b if n else a

    E = sample_box((((-1.0, 1.0),),), density=8)
    assert E.npts == 17
    p = cheb(26) - cheb(6)
    assert sup_norm(p, E) <= 1e-6
    assert refine_check(p, E) > 1e-2


# -- bump functions ---------------------------------------------------------------


@pytest.fixture(scope="module")
def unit_interval_K():
    return sample_box((((0.0, 1.0),),), density=256)


def test_bump_inside_is_one(unit_interval_K):
    h = BumpFunction(unit_interval_K, epsilon=0.1)
    assert h(np.array([0.5])) == pytest.approx(1.0)
    assert h(np.array([1.0 + 0.02])) == pytest.approx(1.0)  # within eps/4


def test_bump_outside_is_zero(unit_interval_K):
    h = BumpFunction(unit_interval_K, epsilon=0.1)
    assert h(np.array([1.2])) == 0.0  # distance 2 eps
    assert h(np.array([-0.11])) == 0.0


def test_bump_range_and_transition(unit_interval_K):
    h = BumpFunction(unit_interval_K, epsilon=0.1)
    grid = np.linspace(-0.4, 1.4, 1201).reshape(-1, 1)
    vals = h.evaluate_many(grid)
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    assert np.any((vals > 0.01) & (vals < 0.99))


def test_bump_derivative_scales_inversely_with_epsilon(unit_interval_K):
    step = 1e-5
    grid = np.linspace(-0.35, 1.35, 3401)

    def max_fd_slope(eps):
        h = BumpFunction(unit_interval_K, epsilon=eps)
        up = h.evaluate_many((grid + step).reshape(-1, 1))
        dn = h.evaluate_many((grid - step).reshape(-1, 1))
        return np.max(np.abs(up - dn) / (2 * step))

    ratio = max_fd_slope(0.1) / max_fd_slope(0.2)
    assert ratio == pytest.approx(2.0, rel=0.1)


def test_bump_derivative_bound_dominates_measurement(unit_interval_K):
    h = BumpFunction(unit_interval_K, epsilon=0.1)
    step = 1e-5
    grid = np.linspace(-0.35, 1.35, 3401)
    up = h.evaluate_many((grid + step).reshape(-1, 1))
    dn = h.evaluate_many((grid - step).reshape(-1, 1))
    measured = np.max(np.abs(up - dn) / (2 * step))
    assert measured <= h.derivative_bound(1) * (1 + 1e-6)
    assert h.derivative_bound(2) > h.derivative_bound(1)
