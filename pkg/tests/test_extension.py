import numpy as np
import pytest

from markovlab.approx import (
    ApproxEntry,
    ApproxSeries,
    counterexample_norm,
    counterexample_poly,
    projection_series,
    series_from_normal_forms,
)
from markovlab.chebysolve import build_basis
from markovlab.extension import (
    build_extension,
    derivative_seminorm,
    determining_diagnostic,
    evaluate_extension,
    evaluate_extension_many,
    telescoped_form,
)
from markovlab.polyring import reduce_to_normal_form


@pytest.fixture(scope="module")
def exp_model(exp_series):
    return build_extension(exp_series, r=3, L=12)


# -- construction ------------------------------------------------------------------


def test_window_must_cover_levels(exp_series):
    with pytest.raises(ValueError):
        build_extension(exp_series, r=2, L=99)
    with pytest.raises(ValueError):
        build_extension(exp_series, r=0, L=4)


def test_family_member_telescoping_stops(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    basis = build_basis(cubic_set, 2, rel=rel)
    member = basis.element_poly(4) * 0.8 + basis.element_poly(0) * 0.3
    values = member.evaluate_many(cubic_set.points)
    series = projection_series(values, rel, cubic_set, 6)
    model = build_extension(series, r=2, L=6)
    # differences vanish once the member is captured
    for l in range(3, 7):
        for i in range(rel.d):
            assert model.diffs[l - 1][i].coefficient_scale() <= 1e-8
    # wherever every bump equals one the model reproduces the member
    vals = evaluate_extension_many(model, cubic_set.points)
    assert np.max(np.abs(vals - values)) <= 1e-8


def test_level_zero_model_is_first_projection(exp_series):
    model = build_extension(exp_series, r=3, L=0)
    p0 = exp_series.entry(0).normal_form.reassemble()
    pts = np.array([[0.3, 0.5], [2.5, -1.0], [-0.2, 0.9]])
    got = evaluate_extension_many(model, pts)
    assert np.allclose(got, p0.evaluate_many(pts), atol=1e-12)


# -- evaluation --------------------------------------------------------------------


def test_on_set_agreement(exp_series, exp_model):
    vals = evaluate_extension_many(exp_model, exp_series.E.points)
    err = np.max(np.abs(vals - exp_series.values))
    assert err <= exp_series.entry(12).error + 1e-8


def test_far_points_collapse_to_first_projection(exp_series, exp_model):
    p0 = exp_series.entry(0).normal_form.reassemble()
    far = np.array([[2.5, 0.4], [-3.0, 1.0], [4.0, -2.0]])  # dist > eps_1 = 1
    got = evaluate_extension_many(exp_model, far)
    ref = p0.evaluate_many(far)
    assert np.max(np.abs(got - ref)) <= 1e-12 * (1 + np.max(np.abs(ref)))


def test_on_set_points_give_top_projection(exp_series, exp_model):
    pl = exp_series.entry(12).normal_form
    pts = exp_series.E.points[::37]
    got = evaluate_extension_many(exp_model, pts)
    ref = pl.evaluate_many(pts)
    assert np.max(np.abs(got - ref)) <= 1e-10


def test_midway_point_is_finite(exp_model):
    v = evaluate_extension(exp_model, (1.0 + 0.5, 0.0))  # inside some bumps only
    assert np.isfinite(v)


def test_telescoping_identity(exp_series, exp_model):
    tele = telescoped_form(exp_model)
    top = exp_series.entry(12).normal_form
    for i in range(3):
        diff = tele.g[i] - top.g[i]
        scale = 1.0 + top.g[i].coefficient_scale()
        assert diff.coefficient_scale() <= 1e-12 * scale


def test_successive_models_differ_by_bounded_term(exp_series):
    m12 = build_extension(exp_series, r=3, L=12)
    m13 = build_extension(exp_series, r=3, L=13)
    E = exp_series.E
    lhs = np.max(np.abs(
        evaluate_extension_many(m13, E.points) - evaluate_extension_many(m12, E.points)
    ))
    rel = exp_series.rel
    proj = m12.base
    xk = np.abs(E.points[:, rel.k0])
    xk_sup = max(np.max(xk ** i) for i in range(rel.d))
    dtop = max(
        np.max(np.abs(g.remove_variable(rel.k).evaluate_many(proj.points)))
        for g in m13.diffs[12]
    )
    assert lhs <= rel.d * xk_sup * dtop + 1e-12


# -- derivative seminorms --------------------------------------------------------------


def test_seminorm_order_zero_is_sup(exp_series, exp_model):
    E = exp_series.E
    got = derivative_seminorm(exp_model, E, 0)
    vals = np.abs(evaluate_extension_many(exp_model, E.points))
    assert got.value == pytest.approx(float(np.max(vals)))
    assert not got.skipped


def test_seminorm_linear_model_second_differences_vanish(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    values = 2.0 * cubic_set.points[:, 0] + 0.25  # a linear target
    series = projection_series(values, rel, cubic_set, 3)
    model = build_extension(series, r=2, L=3)
    sem = derivative_seminorm(model, cubic_set, 2)
    assert sem.per_alpha[(2, 0)] <= 1e-4  # fd noise floor at step 1e-5
    assert sem.per_alpha[(1, 0)] == pytest.approx(2.0, abs=1e-6)


def test_seminorm_stable_between_window_ends(exp_series):
    m8 = build_extension(exp_series, r=3, L=8)
    m12 = build_extension(exp_series, r=3, L=12)
    K = exp_series.E
    s8 = derivative_seminorm(m8, K, 1).value
    s12 = derivative_seminorm(m12, K, 1).value
    assert abs(s12 - s8) <= 0.05 * max(s8, s12)


# -- determining diagnostic --------------------------------------------------------------


def test_zero_target_trivially_determining(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    zero = np.zeros(cubic_set.npts)
    series = projection_series(zero, rel, cubic_set, 12)
    rows = determining_diagnostic(series, rel, [(1, 0), (0, 1)])
    assert all(r.verdict == "tends-to-zero" for r in rows)


def test_scaled_witnesses_tend_to_zero_on_markov_set(cubic_scenario, cubic_set):
    # approximants of the zero function whose norms decay geometrically:
    # derivative norms are crushed by the factor growth n^2 << 4^n
    from markovlab.markov import markov_factor_detail

    rel = cubic_scenario.relation
    zero = np.zeros(cubic_set.npts)
    forms = []
    for level in range(1, 13):
        det = markov_factor_detail(rel, cubic_set, level, (0, 1), grading="total")
        form = det.basis.to_normal_form(det.witness * 4.0 ** (-level))
        forms.append((level, form))
    series = series_from_normal_forms(zero, cubic_set, forms, rel)
    rows = determining_diagnostic(series, rel, [(1, 0), (0, 1)])
    assert all(r.verdict == "tends-to-zero" for r in rows)


def test_slow_family_fails_determining_diagnostic(arcs_scenario, arcs_set):
    rel = arcs_scenario.relation
    zero = np.zeros(arcs_set.npts)
    entries = []
    for n in range(1, 25):
        form = reduce_to_normal_form(counterexample_poly(n), rel)
        nrm = counterexample_norm(n, arcs_set)
        entries.append(ApproxEntry(n, None, form, nrm, nrm))
    series = ApproxSeries(arcs_set, rel, zero, entries)
    rows = determining_diagnostic(series, rel, [(0, 1)])
    assert rows[0].verdict == "not-tends-to-zero"
    assert np.allclose(rows[0].norms, 1.0)


def test_determining_requires_vanishing_target(exp_series, cubic_scenario):
    with pytest.raises(ValueError):
        determining_diagnostic(exp_series, cubic_scenario.relation, [(0, 1)])
