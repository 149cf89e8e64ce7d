import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from tddirk.analysis import estimate_phase_expansion
from tddirk.errors import DomainError, ParameterDomainError
from tddirk.families import (
    FamilyParams2s4,
    FamilyParams3s5,
    beta_for_zero_dispersion,
    lte_norm_5s3,
    lte_norm_5s3_derivative,
    phase_terms_4s2,
    printed_e_polynomial,
    printed_f_polynomial,
    solve_optimal_c2,
    solve_property_I,
    solve_property_II,
    tddirk4s2,
    tddirk5s2,
    tddirk5s3_family,
)
from tddirk.tableau import (
    classify_order,
    get_scheme,
    order_condition_residuals,
    row_assumption_residuals,
)

R33 = math.sqrt(33)


def assert_same_tableau(t, u, tol):
    for x, y in ((t.A, u.A), (t.b, u.b), (t.c, u.c)):
        assert np.max(np.abs(x - y)) <= tol


# -- two-stage family --------------------------------------------------------

def test_4s2_reproduces_4s2a():
    p = FamilyParams2s4((9 - R33) / 24, 23 * (1 + R33) / 960)
    assert_same_tableau(tddirk4s2(p), get_scheme("OTDDIRK4s2a"), 1e-15)


def test_4s2_at_origin():
    t = tddirk4s2(FamilyParams2s4(0.0, 0.0))
    assert t.c[1] == 0.5
    # row assumption: a21 + a22 = c2**2 / 2 = 1/8 with a21 = 0
    assert t.A[1, 1] == pytest.approx(1 / 8, abs=1e-17)
    assert t.b[0] == pytest.approx(1 / 6, abs=1e-17)
    assert t.b[1] == pytest.approx(1 / 3, abs=1e-17)
    assert t.claimed_order == 4


@pytest.mark.parametrize("alpha", [1 / 3, math.nan])
def test_4s2_rejects_bad_alpha(alpha):
    with pytest.raises(ParameterDomainError):
        FamilyParams2s4(alpha, 0.1)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(-1, 1), beta=st.floats(-1, 1))
def test_4s2_family_is_fourth_order(alpha, beta):
    assume(abs(alpha - 1 / 3) > 0.05)
    t = tddirk4s2(FamilyParams2s4(alpha, beta))
    assert all(abs(r.value) <= 1e-14 for r in row_assumption_residuals(t))
    assert all(abs(r.value) <= 1e-13 for r in order_condition_residuals(t, 4))
    assert classify_order(t) >= 4


def test_phase_terms_origin():
    pt = phase_terms_4s2(FamilyParams2s4(0.0, 0.0))
    assert pt.upsilon_psi == pytest.approx(-1 / 80, rel=1e-15)
    assert pt.leading.dispersion_order == 4
    assert pt.leading.dissipation_order == 5
    assert pt.upsilon_phi == pytest.approx(-5 / 576, rel=1e-15)


def test_phase_terms_property_I():
    pt = phase_terms_4s2(solve_property_I()[0])
    assert abs(pt.upsilon_psi) <= 1e-14 and abs(pt.upsilon_phi) <= 1e-14
    assert pt.leading.dispersion_order == 6 and pt.leading.dissipation_order == 7
    # series coefficient of nu**7, checked independently with mpmath
    assert abs(pt.nu7_coefficient) == pytest.approx(6.27270056983e-5, rel=1e-9)
    assert math.isnan(pt.leading.dissipation_constant)


def test_phase_terms_property_II():
    pt = phase_terms_4s2(solve_property_II())
    assert abs(pt.upsilon_psi) <= 1e-12 and abs(pt.D) <= 1e-12
    assert pt.leading.dispersion_order == 8
    assert pt.leading.dissipation_order == 5
    assert abs(pt.upsilon_phi) == pytest.approx(0.00007992350, abs=1e-9)


def test_property_I_roots():
    pairs = solve_property_I()
    assert pairs[0].alpha == pytest.approx((9 - R33) / 24, abs=1e-16)
    assert pairs[1].alpha == pytest.approx((9 + R33) / 24, abs=1e-16)
    assert pairs[0].beta == pytest.approx(23 * (1 + R33) / 960, abs=1e-15)
    for p in pairs:
        assert abs(12 * p.alpha**2 - 9 * p.alpha + 1) <= 1e-15
        pt = phase_terms_4s2(p)
        assert abs(pt.upsilon_psi) <= 1e-14 and abs(pt.upsilon_phi) <= 1e-14


def test_property_II_root():
    a = solve_property_II().alpha
    assert abs(2 - 20 * a + 35 * a**2 - 35 * a**3) <= 1e-14
    w = 34300 + 525 * math.sqrt(6699)
    closed = 1 / 3 - (w ** (2 / 3) - 875) / (105 * w ** (1 / 3))
    assert a == pytest.approx(closed, abs=1e-14)
    assert a == pytest.approx(0.123338033055350934, abs=1e-15)
    assert_same_tableau(tddirk4s2(solve_property_II()), get_scheme("OTDDIRK4s2b"), 1e-15)


def test_beta_for_zero_dispersion():
    for a in (-0.4, 0.1, 0.6):
        pt = phase_terms_4s2(FamilyParams2s4(a, beta_for_zero_dispersion(a)))
        assert abs(pt.upsilon_psi) <= 1e-15


def test_tddirk5s2():
    t = tddirk5s2()
    assert_same_tableau(t, get_scheme("TDDIRK5s2"), 1e-15)
    assert t.claimed_order == 5
    a = t.c[0]
    assert (2 * a * a + 2 * a - 1) / (72 * a - 24) == pytest.approx(1 / 20, abs=1e-15)
    assert all(abs(r.value) <= 1e-14 for r in order_condition_residuals(t, 5))


def test_solvers_are_deterministic():
    assert solve_property_I() == solve_property_I()
    assert solve_property_II() == solve_property_II()
    assert tddirk5s2() == tddirk5s2()
    assert solve_optimal_c2() == solve_optimal_c2()


# -- three-stage family ------------------------------------------------------

def test_5s3_reproduces_builtin():
    c2 = solve_optimal_c2()[0]
    assert_same_tableau(tddirk5s3_family(FamilyParams3s5(c2)), get_scheme("OTDDIRK5s3"), 1e-14)


@pytest.mark.parametrize("c2", [0.0, 0.5, 0.6])
def test_5s3_rejects(c2):
    with pytest.raises(ParameterDomainError):
        FamilyParams3s5(c2)


c2_values = st.one_of(st.floats(0.05, 0.45), st.floats(0.55, 0.95))


@settings(max_examples=60, deadline=None)
@given(c2=c2_values)
def test_5s3_family_is_fifth_order(c2):
    assume(abs(c2 - 0.6) > 1e-3)
    t = tddirk5s3_family(FamilyParams3s5(c2))
    assert all(abs(r.value) <= 1e-12 for r in row_assumption_residuals(t))
    assert all(abs(r.value) <= 1e-12 for r in order_condition_residuals(t, 5))


@pytest.mark.parametrize("c2", [0.15, 0.3, 0.8])
def test_5s3_family_phase_orders(c2):
    # the whole family has dispersion order 8 and dissipation order 7
    est = estimate_phase_expansion(tddirk5s3_family(FamilyParams3s5(c2)))
    assert (est.dispersion_order, est.dissipation_order) == (8, 7)


def test_printed_e_and_f_do_not_vanish():
    # Transcription layer: the printed numerators are nonzero on the family,
    # while the series (previous test) shows the terms they describe vanish.
    p = FamilyParams3s5(solve_optimal_c2()[0])
    assert abs(printed_e_polynomial(p.c2, p.a21, p.a31)) > 1.0
    assert abs(printed_f_polynomial(p.c2, p.a21, p.a31)) > 1.0


def test_lte_norm_values():
    assert lte_norm_5s3(0.0) == pytest.approx(-122 / 3969000000, rel=1e-15)
    with pytest.raises(DomainError):
        lte_norm_5s3(0.5)
    with pytest.raises(DomainError):
        lte_norm_5s3_derivative(0.5)


@pytest.mark.parametrize("c2", [0.1, 0.3, 0.9])
def test_lte_derivative_matches_central_difference(c2):
    h = 1e-6
    fd = (lte_norm_5s3(c2 + h) - lte_norm_5s3(c2 - h)) / (2 * h)
    assert fd == pytest.approx(lte_norm_5s3_derivative(c2), rel=1e-8)


def test_optimal_c2():
    r1, r2 = solve_optimal_c2()
    assert r1 == pytest.approx(0.2763932, abs=1e-7)
    assert r1 < r2
    for r in (r1, r2):
        assert abs(5 * r * r - 5 * r + 1) <= 1e-15
        assert abs(lte_norm_5s3_derivative(r)) <= 1e-12
        h = 1e-4
        second = (lte_norm_5s3(r + h) - 2 * lte_norm_5s3(r) + lte_norm_5s3(r - h)) / h**2
        assert abs(second) <= 1e-6
