import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rarefied.core import ell_gamma, q_pochhammer
from rarefied.errors import DomainError, PoleProximityError
from rarefied.gamma import (BaseParams, RGPoint, gamma_periodic, gamma_poles, gamma_r, gamma_r_norm, gamma_r_product,
                            inv_gamma_pm2, inv_gamma_pm2_display, inv_gamma_r_norm_pm2, periodic_exponent,
                            residue_limit, residue_probe)
from rarefied.identities import gamma_network

from test_core import brute_gamma


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture
def p2():
    return BaseParams.from_nomes(2, 0.2, 0.3)


def test_params_validation():
    with pytest.raises(DomainError):
        BaseParams(0, 0.3j, 0.3j)
    with pytest.raises(DomainError):
        BaseParams(1, 0.3, 0.3j)
    with pytest.raises(DomainError):
        BaseParams.from_nomes(2, 1.1, 0.2)
    p = BaseParams.from_nomes(3, 0.2 * cmath.exp(0.7j), 0.1)
    assert abs(p.p - 0.2 * cmath.exp(0.7j)) < 1e-15
    assert abs(p.pr - p.p ** 3) < 1e-15
    assert p.swapped().swapped() == p


def test_rgpoint_labels():
    pt = RGPoint(0.1, -3)
    assert pt.m == -1.5
    assert pt.parity == -1
    assert pt.label(2) == 1
    assert RGPoint(0.1, 4).parity == 1


def test_gamma_r_against_brute_product():
    params = BaseParams.from_nomes(2, 0.2, 0.3)
    z = 0.4 + 0.1j
    p, q = params.p, params.q
    ref = brute_gamma(z * p, p ** 2, p * q) * brute_gamma(z * q, q ** 2, p * q)
    assert rel(gamma_r(z, 2, params), ref) < 1e-12


def test_r1_m0_is_plain_gamma():
    params = BaseParams.from_nomes(1, 0.2, 0.3)
    assert rel(gamma_r(0.5, 0, params), ell_gamma(0.5, 0.2, 0.3)) < 1e-14


def test_rarefied_product_example():
    params = BaseParams.from_nomes(3, 0.15, 0.2)
    assert rel(gamma_r_product(0.4, 4, params), gamma_r(0.4, 4, params)) < 1e-13


def test_product_form_rejects_out_of_range():
    params = BaseParams.from_nomes(2, 0.15, 0.2)
    with pytest.raises(DomainError):
        gamma_r_product(0.4, 6, params)
    with pytest.raises(DomainError):
        gamma_r_product(0.4, 1, params)


def test_inversion_example(p2):
    z = 0.5 + 0.1j
    assert abs(gamma_r(z, 2, p2) * gamma_r(p2.pq / z, 2, p2) - 1) < 1e-13


def test_norm_r1_collapse():
    params = BaseParams.from_nomes(1, 0.2, 0.3)
    ref = ell_gamma(0.4, 0.2, 0.3)
    for m in (0, 1, 2, -1):
        assert rel(gamma_r_norm(0.4, 2 * m, params), ref) < 1e-13


def test_norm_inversion_and_symmetry():
    params = BaseParams.from_nomes(2, 0.2, 0.3)
    z = 0.45 + 0.2j
    assert abs(gamma_r_norm(z, 2, params) * gamma_r_norm(params.pq / z, -2, params) - 1) < 1e-13
    p3 = BaseParams.from_nomes(3, 0.2, 0.3)
    assert rel(gamma_r_norm(z, 4, p3), gamma_r_norm(z, -4, p3.swapped())) < 1e-13


def test_periodic_examples():
    params = BaseParams.from_nomes(2, 0.2 * cmath.exp(0.3j), 0.25)
    u = 0.1 + 0.05j
    assert rel(gamma_periodic(u, 6, params), gamma_periodic(u, 2, params)) < 1e-13
    assert abs(gamma_periodic(u, 2, params) * gamma_periodic(params.tau + params.sigma - u, -2, params) - 1) < 1e-13
    p3 = BaseParams.from_nomes(3, 0.2 * cmath.exp(0.3j), 0.25)
    m, r = 1, 3
    phase = cmath.exp(1j * math.pi * m * (m - r) * (2 * m - r) / (3 * r))
    assert rel(gamma_periodic(u, -2, p3.swapped()), phase * gamma_periodic(u, 2, p3)) < 1e-13


def test_periodic_prefactor_is_exact_rational():
    params = BaseParams(2, 0.3j, 0.25j)
    # m = r: the exponent vanishes identically
    assert periodic_exponent(0.37 + 0.1j, 4, params) == 0
    assert periodic_exponent(0.37, 0, params) == 0


def test_residue_limit_oracle():
    params = BaseParams.from_nomes(2, 0.2, 0.3)
    ref = 1 / (q_pochhammer(0.04, 0.04) * q_pochhammer(0.09, 0.09))
    assert rel(residue_limit(params), ref) < 1e-14
    tiny = BaseParams.from_nomes(1, 1e-9, 1e-9)
    assert abs(residue_limit(tiny) - 1) < 1e-8


def test_residue_probe_converges():
    params = BaseParams.from_nomes(2, 0.2, 0.3)
    lim = residue_limit(params)
    errs = [abs(residue_probe(params, s * (1 + 1j)) / lim - 1) for s in (1e-3, 1e-4)]
    assert errs[1] < 1e-3
    assert errs[1] < errs[0] / 5


def test_inv_gamma_pm2_matches_gamma_ratio():
    for r in (1, 2, 3):
        params = BaseParams.from_nomes(r, 0.2 * cmath.exp(0.4j), 0.15)
        u = 0.13 + 0.02j
        for two_m in range(-3, 2 * r + 2):
            ratio = 1 / (gamma_periodic(2 * u, 2 * two_m, params) * gamma_periodic(-2 * u, -2 * two_m, params))
            assert rel(inv_gamma_pm2(u, two_m, params), ratio) < 1e-12


def test_inv_gamma_pm2_finite_at_poles():
    params = BaseParams.from_nomes(2, 0.2, 0.15)
    assert abs(inv_gamma_pm2(0.0, 0, params)) < 1e-14
    assert np.isfinite(inv_gamma_pm2(0.5, 1, params))


def test_display_form_on_agreeing_labels():
    params = BaseParams.from_nomes(2, 0.2 * cmath.exp(0.4j), 0.15)
    for u in (0.23, 0.07 + 0.01j):
        for two_m in (0, 2):
            assert rel(inv_gamma_pm2_display(u, two_m, params), inv_gamma_pm2(u, two_m, params)) < 1e-12


def test_norm_pm2_matches_gamma_ratio():
    params = BaseParams.from_nomes(2, 0.2 * cmath.exp(0.4j), 0.15)
    z = cmath.exp(2j * math.pi * (0.11 + 0.01j))
    for two_m in (0, 1, 2, 3):
        n = 2 * two_m
        ratio = 1 / (gamma_r_norm(z ** 2, n, params) * gamma_r_norm(z ** -2, -n, params))
        assert rel(inv_gamma_r_norm_pm2(z, two_m, params), ratio) < 1e-11


def test_pole_listing_hits_poles():
    params = BaseParams.from_nomes(2, 0.2 * cmath.exp(0.4j), 0.15)
    for two_n in (0, 2, -2):
        x = gamma_poles(two_n, params, limit=4)[0]
        with pytest.raises(PoleProximityError):
            gamma_r(x, two_n, params)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_identity_network(r):
    res = gamma_network(r)
    worst = {k: v for k, v in res.items() if k != "residue-limit"}
    assert max(worst.values()) < 1e-10, worst
    assert res["residue-limit"] < 1e-3


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-0.5, 0.5), y=st.floats(-0.05, 0.05), two_m=st.integers(-6, 9), r=st.integers(1, 3))
def test_inversion_property(x, y, two_m, r):
    params = BaseParams.from_nomes(r, 0.2 * cmath.exp(0.4j), 0.15)
    z = cmath.exp(2j * math.pi * complex(x, y))
    try:
        val = gamma_r(z, two_m, params) * gamma_r(params.pq / z, 2 * r - two_m, params)
    except PoleProximityError:
        return
    assert abs(val - 1) < 1e-9


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-0.5, 0.5), two_m=st.integers(-6, 9), r=st.integers(1, 3))
def test_permutation_property(x, two_m, r):
    params = BaseParams.from_nomes(r, 0.2 * cmath.exp(0.4j), 0.15)
    z = cmath.exp(2j * math.pi * complex(x, 0.01))
    assert rel(gamma_r(z, 2 * r - two_m, params.swapped()), gamma_r(z, two_m, params)) < 1e-11
