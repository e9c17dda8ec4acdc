import math

import numpy as np
import pytest

from rarefied.bailey import (bailey_pair_check, bailey_pair_seed, chain_step, d_coeff, fourier_test_function,
                             half_sum, integration_parity, m_transform, minv_guard,
                             str_operator_check, tilde, unit_limit)
from rarefied.errors import BalancingError, ContourPinchError, DomainError, ParityError, PeriodicityError
from rarefied.gamma import BaseParams, gamma_periodic
from rarefied.suites import BAILEY_N, BAILEY_NOMES, BAILEY_POINTS, BAILEY_T, BETA_NOMES, inversion, operator_str


@pytest.fixture(scope="module")
def p2():
    return BaseParams.from_nomes(2, *BETA_NOMES)


@pytest.fixture(scope="module")
def seed(p2):
    return bailey_pair_seed(BAILEY_T, BAILEY_N, p2)


def test_tilde_and_parity():
    assert tilde(0, 3) == 0
    assert tilde(2, 3) == 4
    assert tilde(1, 2) == 3
    assert tilde(6, 3) == 0
    assert integration_parity(1, 0) == 1
    assert integration_parity(3, 1) == 0


def test_d_inversion(p2):
    v, y = np.array([0.11 + 0.02j, -0.3]), 0.17
    for two_l, two_j, two_k in ((0, 0, 0), (2, 1, 1), (1, 1, 0)):
        a = d_coeff(0.03 + 0.04j, two_l, y, two_j, v, two_k, p2)
        b = d_coeff(-0.03 - 0.04j, -two_l, y, two_j, v, two_k, p2)
        assert np.max(np.abs(a * b - 1)) < 1e-12


def test_d_trivial(p2):
    v = np.array([0.11 + 0.02j, -0.3])
    for two_j, two_k in ((0, 0), (1, 1), (2, 4)):
        assert np.max(np.abs(d_coeff(0, 0, 0.2, two_j, v, two_k, p2) - 1)) < 1e-12


def test_d_decomposition(p2):
    s, y, v = 0.03 + 0.04j, 0.17, 0.21 + 0.01j
    c = half_sum(p2) - s
    ref = 1
    for e in (1, -1):
        for d in (1, -1):
            ref *= gamma_periodic(c + e * y + d * v, -2 + e * 1 + d * 1, p2)
    assert abs(d_coeff(s, 2, y, 1, v, 1, p2) / ref - 1) < 1e-14


def test_d_parity(p2):
    with pytest.raises(ParityError):
        d_coeff(0.1j, 1, 0.2, 0, 0.1, 0, p2)


def test_transform_contour_precondition(p2):
    f = fourier_test_function(2, 0)
    with pytest.raises(DomainError):
        m_transform(0.05 + 0.01j, 0, f, 0.3 + 0.02j, 0, p2)


def test_transform_rejects_nonperiodic(p2):
    f = lambda u, m: np.exp(1j * math.pi * np.asarray(u))
    with pytest.raises(PeriodicityError):
        m_transform(0.05 + 0.05j, 0, f, 0.1, 0, p2, n_nodes=32)


def test_seed_balancing_exact(seed, p2):
    assert abs(2 * seed.t + sum(BAILEY_T) - p2.tau - p2.sigma) < 1e-15
    assert seed.two_n == -sum(BAILEY_N) // 2


def test_seed_validation(p2):
    with pytest.raises(ParityError):
        bailey_pair_seed(BAILEY_T, (0, 1, 0, 1), p2)
    with pytest.raises(BalancingError):
        bailey_pair_seed((0.3 + 0.3j,) * 4, BAILEY_N, p2)


def test_seed_pair_property(seed, p2):
    pts = [(v, k + seed.beta_parity) for v, k in BAILEY_POINTS]
    res = bailey_pair_check(seed, pts, p2)
    assert len(pts) == 6
    assert res.residual < 1e-8


def test_seed_pair_r1():
    p1 = BaseParams.from_nomes(1, *BETA_NOMES)
    pair = bailey_pair_seed(BAILEY_T, BAILEY_N, p1)
    res = bailey_pair_check(pair, [(0.13, pair.beta_parity), (-0.2, pair.beta_parity)], p1)
    assert res.residual < 1e-10


def test_trivial_chain_step(seed, p2):
    step = chain_step(seed, 0, 0, 0.21, 0, p2)
    for v, k in ((0.17, 0), (-0.3 + 0.01j, 2)):
        assert abs(step.alpha(v, k) / seed.alpha(v, k) - 1) < 1e-12


def test_chain_step_property(seed, p2):
    step = chain_step(seed, 0.02 + 0.03j, 2, 0.21, 0, p2)
    pts = [(v, k + step.beta_parity) for v, k in BAILEY_POINTS[:4]]
    assert bailey_pair_check(step, pts, p2).residual < 1e-7


def test_chain_step_parity(seed, p2):
    with pytest.raises(ParityError):
        chain_step(seed, 0.02 + 0.03j, 1, 0.21, 0, p2)


def test_two_steps_return_original():
    p1 = BaseParams.from_nomes(1, *BETA_NOMES)
    pair = bailey_pair_seed(BAILEY_T, BAILEY_N, p1)
    s, two_l = 0.02 + 0.05j, 2
    there = chain_step(pair, s, two_l, 0.21, 0, p1, n_nodes=128, deform=True)
    back = chain_step(there, -s, -two_l, 0.21, 0, p1, n_nodes=128, deform=True)
    v, k = 0.13, pair.beta_parity
    assert abs(back.beta(v, k) / pair.beta(v, k) - 1) < 1e-9
    assert abs(back.alpha(0.2, 0) / pair.alpha(0.2, 0) - 1) < 1e-12


def test_operator_str_r1_decay():
    p1 = BaseParams.from_nomes(1, *BAILEY_NOMES)
    errs = [str_operator_check(0.03 + 0.05j, 0, -0.02 + 0.06j, 0, 0.17, 0, p1, n_nodes=n).residual
            for n in (32, 64, 128)]
    assert errs[1] < 1e-6
    assert errs[1] < errs[0] / 10 and errs[2] < errs[1]


def test_operator_str_suite_r2():
    for res in operator_str(r=2):
        assert res.passed, res.residual
        (_, e1), (_, e2) = res.history
        assert e2 < e1 / 10


def test_str_parity_rule():
    p1 = BaseParams.from_nomes(2, *BAILEY_NOMES)
    with pytest.raises(ParityError):
        str_operator_check(0.03 + 0.05j, 0, -0.02 + 0.06j, 0, 0.17, 1, p1, n_nodes=16)


def test_symmetric_test_function():
    for r, mu in ((1, 0), (2, 0), (3, 1)):
        f = fourier_test_function(r, mu)
        u = np.array([0.1 + 0.01j, 0.37])
        for i in range(r):
            two_m = 2 * i + mu
            assert np.max(np.abs(f(u, two_m) - f(-u, (-two_m) % (2 * r)))) < 1e-15
            assert np.max(np.abs(f(u + 1, two_m) - f(u, two_m))) < 1e-12


def test_minv_guard():
    p1 = BaseParams.from_nomes(1, *BAILEY_NOMES)
    with pytest.raises(ContourPinchError):
        minv_guard(p1.sigma / 2, p1)
    assert minv_guard(0.01 - 0.02j, p1) > 1e-3


@pytest.mark.parametrize("r", [1, 2])
def test_inversion_and_unit_limit(r):
    minv, unit = inversion(r=r)
    assert minv.residual < 1e-4
    assert unit.passed
    assert all(abs(x - 0.5) < 0.1 for x in unit.rhs)


def test_unit_limit_target_is_symmetrizer():
    p1 = BaseParams.from_nomes(1, *BAILEY_NOMES)
    f = fourier_test_function(1, 0)
    devs, _ = unit_limit(f, 0.21, 0, p1, s_values=(0.002j,))
    assert devs[0] < 0.05 * abs(f(0.21, 0))
