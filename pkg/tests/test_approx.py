import math

import numpy as np
import pytest

from markovlab.approx import (
    GAMMA_MINUS_ONE_THIRD,
    counterexample_coefficients,
    counterexample_norm,
    counterexample_poly,
    decay_diagnostic_from_errors,
    gamma_ratio,
    gamma_ratio_limit_check,
    gauss_2f1,
    logpochhammer,
    metric_projection,
    pochhammer,
    projection_series,
    rapid_decrease_diagnostic,
    seminorm_delta,
    series_from_errors,
    tail_closed_form,
    tail_direct,
    target_values,
)
from markovlab.chebysolve import build_basis
from markovlab.polyring import parse_poly, reduce_to_normal_form


# -- metric projections -----------------------------------------------------------


def test_projection_reproduces_family_member(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    basis = build_basis(cubic_set, 3, rel=rel)
    target = basis.element_poly(5) * 1.25 + basis.element_poly(2) * -0.5
    values = target.evaluate_many(cubic_set.points)
    form, fit = metric_projection(values, rel, cubic_set, 3)
    assert fit.error <= 1e-9
    assert fit.achieved <= 1e-8


def test_projection_of_relation_power_collapses(cubic_scenario, cubic_set):
    # y^3 equals (1 - x^2) y on the surface: a level-2 slice reproduces it
    rel = cubic_scenario.relation
    values = cubic_set.points[:, 1] ** 3
    form, fit = metric_projection(values, rel, cubic_set, 2)
    assert fit.achieved <= 1e-10
    expected = reduce_to_normal_form(parse_poly("1*x2^3", 2), rel)
    direct = expected.evaluate_many(cubic_set.points)
    assert np.max(np.abs(direct - values)) <= 1e-12


def test_exp_target_decays_geometrically(exp_series):
    errs = exp_series.errors
    levels = exp_series.levels
    keep = errs > 1e-13
    logs = np.log(errs[keep])
    ls = levels[keep].astype(float)
    slope = np.polyfit(ls, logs, 1)[0]
    assert slope < -0.5
    for a, b in zip(errs, errs[1:]):
        assert b <= a + 1e-10


# -- seminorms ----------------------------------------------------------------------


def test_seminorm_minus_one_is_sup_of_target(exp_series):
    got = seminorm_delta(exp_series, -1)
    assert got.value == pytest.approx(float(np.max(np.abs(exp_series.values))))
    assert not got.stale


def test_seminorm_zero_is_first_error(exp_series):
    assert seminorm_delta(exp_series, 0).value == exp_series.entry(0).error


def test_seminorm_of_family_polynomial_is_finite_sup(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    basis = build_basis(cubic_set, 2, rel=rel)
    target = basis.element_poly(4)
    values = target.evaluate_many(cubic_set.points)
    series = projection_series(values, rel, cubic_set, 8)
    for nu in (1, 2, 5):
        v = seminorm_delta(series, nu)
        assert np.isfinite(v.value)
        assert not v.stale  # errors are zero past the member's level


def test_seminorm_exp_delta3_not_stale(exp_series):
    got = seminorm_delta(exp_series, 3)
    assert np.isfinite(got.value)
    assert not got.stale


# -- decay diagnostics -----------------------------------------------------------------


def test_decay_exponential_beats_every_power():
    levels = np.arange(1, 21)
    errors = 2.0 ** (-levels.astype(float))
    diag = decay_diagnostic_from_errors(levels, errors, [1, 2, 4, 8, 10])
    assert all(row.verdict == "decreasing-tail" for row in diag.rows)


def test_decay_harmonic_grows_for_r_at_least_two():
    levels = np.arange(1, 21)
    errors = 1.0 / levels.astype(float)
    diag = decay_diagnostic_from_errors(levels, errors, [1, 2, 4])
    assert diag.verdict(2) == "growing"
    assert diag.verdict(4) == "growing"
    assert diag.verdict(1) == "inconclusive"  # constant sequence


def test_decay_window_minimum_enforced():
    with pytest.raises(ValueError):
        decay_diagnostic_from_errors(np.arange(1, 9), np.ones(8), [1])


def test_slow_family_norms_are_rapidly_decreasing(arcs_set):
    ns = np.arange(1, 61)
    norms = np.array([counterexample_norm(int(n), arcs_set) for n in ns])
    series = series_from_errors(ns, norms)
    diag = rapid_decrease_diagnostic(series, [1, 2, 4, 8, 10])
    assert all(row.verdict == "decreasing-tail" for row in diag.rows)


# -- special functions -------------------------------------------------------------------


def test_pochhammer_values():
    assert pochhammer(0.37, 0) == 1.0
    assert pochhammer(2.0, 3) == pytest.approx(24.0)
    assert pochhammer(2.0 / 3.0, 2) == pytest.approx(10.0 / 9.0, rel=1e-15)


def test_pochhammer_overflow_guard():
    with pytest.raises(OverflowError):
        pochhammer(100.0, 400)
    # the log variant handles the same magnitude
    assert logpochhammer(100.0, 400) == pytest.approx(
        math.lgamma(500.0) - math.lgamma(100.0)
    )


def test_gauss_identity_small_k():
    for k in (0, 5):
        val = gauss_2f1(1.0, 2.0 / 3.0 + k, 2.0 + k, 1.0)
        assert val == pytest.approx(3.0 * (1 + k), rel=1e-12)


def test_gauss_at_zero_is_one():
    assert gauss_2f1(0.3, -1.7, 2.2, 0.0) == 1.0


def test_gauss_divergent_at_one_rejected():
    with pytest.raises(ValueError):
        gauss_2f1(2.0, 1.0, 2.5, 1.0)  # c - a - b = -0.5
    with pytest.raises(ValueError):
        gauss_2f1(1.0, 1.0, -3.0, 0.5)  # nonpositive integer c


def test_gauss_increasing_in_z_for_positive_coefficients():
    vals = [gauss_2f1(1.0, 2.0 / 3.0 + 4, 2.0 + 4, z) for z in (0.1, 0.3, 0.6, 0.9)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < gauss_2f1(1.0, 2.0 / 3.0 + 4, 2.0 + 4, 1.0)


def test_gamma_constant_cross_checked_by_reflection():
    reflected = -math.pi / (math.sin(math.pi / 3.0) * math.gamma(4.0 / 3.0))
    assert GAMMA_MINUS_ONE_THIRD == pytest.approx(reflected, rel=1e-13)


def test_gamma_ratio_exact_for_integer_orders():
    assert gamma_ratio(137.0, 0.0) == 1.0
    assert gamma_ratio(137.0, 1.0) == 1.0


def test_gamma_ratio_envelope():
    rows = gamma_ratio_limit_check(-1.0 / 3.0, [50, 200, 1000])
    by_n = {r.n: r for r in rows}
    assert abs(by_n[1000].ratio - 1.0) <= 3e-4
    assert all(r.ok for r in rows)


# -- the slow counterexample family ------------------------------------------------------


def test_counterexample_coefficients_start():
    c = counterexample_coefficients(3)
    assert c[0] == 1.0
    assert c[1] == pytest.approx(-1.0 / 3.0, rel=1e-15)
    # cross-check against the Gamma quotient via Gamma(2/3) = (-1/3) Gamma(-1/3)
    assert c[1] == pytest.approx(math.gamma(2.0 / 3.0) / GAMMA_MINUS_ONE_THIRD, rel=1e-14)
    assert all(ck < 0 for ck in c[1:])


def test_counterexample_series_sums_to_cube_root():
    c = counterexample_coefficients(60)
    total = sum(ck * 0.25 ** k for k, ck in enumerate(c))
    assert total == pytest.approx(0.75 ** (1.0 / 3.0), abs=1e-12)


def test_counterexample_poly_structure():
    p = counterexample_poly(7)
    assert p.max_power(2) == 1
    dp = p.differentiate((0, 1))
    assert dp.terms == {(0, 0): 1.0}
    with pytest.raises(ValueError):
        counterexample_poly(201)


def test_tail_identity_against_direct_summation():
    for n in (5, 10, 20):
        for x in (0.25, 1.0 / 3.0, 0.5):
            closed = tail_closed_form(n, x)
            direct = tail_direct(n, x)
            assert closed == pytest.approx(direct, rel=1e-10)
            assert closed < 0  # same sign as every coefficient past c_0


def test_tail_vanishes_at_origin():
    assert tail_closed_form(12, 0.0) == 0.0


def test_norm_monotone_and_attained_at_half(arcs_set):
    norms = [counterexample_norm(n, arcs_set) for n in (5, 10, 15, 20)]
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] == pytest.approx(abs(tail_closed_form(20, 0.5)), rel=1e-12)


def test_norm_requires_matching_relation(cubic_set):
    with pytest.raises(ValueError):
        counterexample_norm(5, cubic_set)


def test_log_norm_over_n_structure(arcs_set):
    # honest decay structure: values rise toward -log 4 from below and the
    # n^10-scaled sequence decreases strictly
    ns = list(range(20, 61, 5))
    norms = [counterexample_norm(n, arcs_set) for n in ns]
    ratios = [math.log(v) / n for n, v in zip(ns, norms)]
    assert all(-1.75 <= r <= -1.45 for r in ratios)
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - (-math.log(4.0))) <= 0.15
    scaled = [n ** 10 * v for n, v in zip(ns, norms)]
    assert all(b < a for a, b in zip(scaled, scaled[1:]))


# -- targets -----------------------------------------------------------------------------


def test_target_registry(cubic_scenario, cubic_set):
    rel = cubic_scenario.relation
    vals = target_values("exp-xy", cubic_set, rel)
    direct = np.exp(cubic_set.points[:, 0]) * cubic_set.points[:, 1]
    assert np.array_equal(vals, direct)
    with pytest.raises(ValueError):
        target_values("no-such-target", cubic_set, rel)


def test_series_errors_match_achieved_residuals(exp_series):
    for e in exp_series.entries:
        assert abs(e.achieved - e.error) <= 1e-9


def test_seminorm_staleness_flag():
    levels = np.arange(1, 16)
    series = series_from_errors(levels, 1.0 / levels.astype(float))
    got = seminorm_delta(series, 2)  # l^2 / l = l peaks at the right edge
    assert got.stale
    assert got.value == pytest.approx(15.0)
