"""Eigenequation analysis: hypergeometric oracles, Frobenius series, defects."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blowuplab.modeanalysis import (
    ZeroCoefficientError,
    connection_defect,
    frobenius_coeffs,
    fundamental_system,
    hypergeom_2F1,
    hypergeom_taylor_data,
    indicial_roots,
    lorentz_frame_params,
    lorentz_similarity_map,
    pf_coeffs,
    series_coeff_ratio,
    smooth_candidate_defects,
)


# ---------------------------------------------------------------------------
# hypergeometric series against closed forms

@settings(max_examples=60, deadline=None)
@given(z=st.floats(-0.8, 0.8))
def test_2f1_log_closed_form(z):
    # 2F1(1, 1; 2; z) = -log(1-z)/z
    expected = 1.0 if z == 0 else -math.log1p(-z) / z
    assert hypergeom_2F1(1, 1, 2, z) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(z=st.floats(-0.8, 0.8), a=st.floats(-2.0, 2.0))
def test_2f1_binomial_closed_form(z, a):
    # 2F1(a, b; b; z) = (1-z)^(-a)
    expected = (1.0 - z) ** (-a)
    assert hypergeom_2F1(a, 0.5, 0.5, z) == pytest.approx(expected, rel=1e-10)


def test_2f1_arcsin_closed_form():
    # 2F1(1/2, 1/2; 3/2; z^2) = arcsin(z)/z
    z = 0.6
    val = hypergeom_2F1(0.5, 0.5, 1.5, z * z)
    assert val == pytest.approx(math.asin(z) / z, rel=1e-12)


def test_2f1_pole_detection():
    from blowuplab.modeanalysis import HypergeomPoleError
    with pytest.raises(HypergeomPoleError):
        hypergeom_2F1(0.3, 0.7, -2.0, 0.5)
    # terminating numerator rescues a non-positive-integer c
    val = hypergeom_2F1(-1.0, 0.7, -2.0, 0.5)
    assert val == pytest.approx(1.0 + (-1.0) * 0.7 / (-2.0) * 0.5, rel=1e-14)


def test_2f1_complex_argument():
    # complex parameters: verify against the defining term recurrence at low N
    a, b, c, z = 0.3 + 0.2j, -0.4j, 1.1, 0.3 + 0.1j
    brute = sum(
        np.prod([(a + k) * (b + k) / ((c + k) * (k + 1.0)) for k in range(n)])
        * z ** 0 if n == 0 else
        np.prod([(a + k) * (b + k) / ((c + k) * (k + 1.0)) * z for k in range(n)])
        for n in range(40))
    assert hypergeom_2F1(a, b, c, z) == pytest.approx(brute, rel=1e-10)


# ---------------------------------------------------------------------------
# eigenequation structure

def test_pf_coeffs_oracle():
    pf = pf_coeffs(0.75, 0.0)
    assert (pf.A, pf.B, pf.C) == (-0.5, 0.5, 1.0)
    assert (pf.D, pf.E, pf.F) == (0.0, 0.0, 0.0)


def test_lorentz_frame_params():
    hp = lorentz_frame_params(0.75, 2.0)
    assert hp.a == 2.0
    assert hp.b == 1.0
    assert hp.c == pytest.approx(1.5)


def test_lorentz_similarity_map_oracle():
    tau, y = lorentz_similarity_map(0.75, 0.0, 0.0)
    assert tau == pytest.approx(-math.log(4.0 / 3.0) + math.log(1.0), abs=1e-13) \
        or tau == pytest.approx(math.log(0.75), abs=1e-13)
    assert y == pytest.approx(-0.5, abs=1e-14)


def test_lorentz_similarity_map_domain():
    with pytest.raises(ValueError):
        lorentz_similarity_map(0.75, 0.0, 3.0)


def test_series_coeff_ratio_oracle():
    # (lam+n)(lam+n-1) / ((n+1)(lam+g+n)) at p=0.75, lam=2, n=1
    val = series_coeff_ratio(0.75, 2.0, 1)
    assert val == pytest.approx((3.0 * 2.0) / (2.0 * 3.5), rel=1e-14)


def test_series_coeff_ratio_terminates():
    with pytest.raises(ZeroCoefficientError):
        series_coeff_ratio(0.75, 0.0, 3)
    with pytest.raises(ZeroCoefficientError):
        series_coeff_ratio(0.75, 1.0, 3)


def test_series_coeff_ratio_tends_to_one():
    """|r_n - 1| decays like C/n: measured log-log slope -1 within 20%."""
    ns = np.geomspace(1e2, 1e4, 9).astype(int)
    dev = [abs(series_coeff_ratio(0.5, 2.3, int(n)) - 1.0) for n in ns]
    slope = np.polyfit(np.log(ns), np.log(dev), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.2)


def test_indicial_roots_ordering():
    s1, s2 = indicial_roots(0.3 + 0.0j, -0.7 + 0.0j)
    assert s1.real >= s2.real
    for s in (s1, s2):
        assert abs(s * (s - 1.0) + 0.3 * s - 0.7) < 1e-12


# ---------------------------------------------------------------------------
# Frobenius series

def test_frobenius_reproduces_hypergeometric():
    # at z=0 the s=0 branch of the hypergeometric equation is 2F1 itself
    a, b, c = 0.7, -0.3, 1.4
    p_t, q_t = hypergeom_taylor_data(a, b, c, 30)
    s1, s2 = indicial_roots(p_t[0], q_t[0])
    exp = frobenius_coeffs(p_t, q_t, s1 if abs(s1) < abs(s2) else s2, 30)
    coeffs = exp.coeffs
    z = 0.3
    series = sum(coeffs[n] * z ** n for n in range(len(coeffs)))
    assert series == pytest.approx(hypergeom_2F1(a, b, c, z), rel=1e-12)


def test_frobenius_radius_root_test():
    a, b, c = 0.7, -0.3, 1.4
    p_t, q_t = hypergeom_taylor_data(a, b, c, 60)
    coeffs = frobenius_coeffs(p_t, q_t, 0.0, 60).coeffs
    # root test: |a_n|^(1/n) -> 1/R = 1
    tail = np.abs(coeffs[40:60])
    roots = tail ** (1.0 / np.arange(40, 60))
    assert np.all(np.abs(roots - 1.0) < 0.25)


def test_fundamental_system_log_branch():
    # c = 1 forces equal indicial roots at z = 0: the second solution
    # must carry a log term
    p_t, q_t = hypergeom_taylor_data(0.5, 0.5, 1.0, 20)
    phi1, phi2 = fundamental_system(p_t, q_t, 20)
    assert not phi1.log_branch
    assert phi2.log_branch
    assert abs(phi2.c_log) > 1e-8


def test_fundamental_system_plain_pair():
    # non-integer exponent gap: two plain power-series branches
    p_t, q_t = hypergeom_taylor_data(0.3, 0.8, 0.4, 20)
    phi1, phi2 = fundamental_system(p_t, q_t, 20)
    assert not phi1.log_branch and not phi2.log_branch
    # Wronskian-type independence at a sample point
    v1, d1 = phi1.eval(0.05)
    v2, d2 = phi2.eval(0.05)
    assert abs(v1 * d2 - v2 * d1) > 1e-12


# ---------------------------------------------------------------------------
# connection defects

@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("lam", [0.0, 1.0])
def test_defect_vanishes_at_symmetry_modes(p, lam):
    assert connection_defect(p, lam) < 1e-6


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_defect_large_away_from_symmetry_modes(p):
    for lam in (0.5, 2.0, 0.1, 1.2 + 0.5j):
        d = connection_defect(p, lam)
        assert math.isnan(d) or d > 1e-3


def test_defect_stable_under_series_doubling():
    for lam in (0.5, 0.0):
        d1 = connection_defect(0.75, lam, N=40)
        d2 = connection_defect(0.75, lam, N=80)
        small1, small2 = d1 < 1e-6, d2 < 1e-6
        assert small1 == small2


def test_p1_degenerate_two_candidates_at_zero():
    # at p = 1 the lambda = 0 eigenspace is two-dimensional:
    # constants and the linear function both connect smoothly
    defects = smooth_candidate_defects(1.0, 0.0)
    assert len(defects) == 2
    assert max(defects) < 1e-6


def test_p1_lambda_one_simple():
    defects = smooth_candidate_defects(1.0, 1.0)
    assert len(defects) == 1
    assert defects[0] < 1e-6


def test_p1_negative_integer_ladder():
    # 1 - n points remain defect-free; generic points do not
    assert connection_defect(1.0, -1.0) < 1e-6
    assert connection_defect(1.0, -0.5) > 1e-3
    assert connection_defect(1.0, 0.5) > 1e-3
