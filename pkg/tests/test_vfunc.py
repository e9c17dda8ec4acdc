import numpy as np
import pytest

from rarefied.beta import beta_rhs, sample_param_sets
from rarefied.errors import BalancingError, DomainError, ParityError
from rarefied.gamma import BaseParams
from rarefied.quadrature import CircleGrid, SpinGrid
from rarefied.suites import BETA_NOMES, e7
from rarefied.vfunc import VParams, e7_map, sample_vparams, v_function, v_kernel, verify_e7


def params(r):
    return BaseParams.from_nomes(r, *BETA_NOMES)


@pytest.mark.parametrize("r,mu", [(1, 0), (2, 0), (2, 1)])
def test_reflection_pair_reduces_to_beta(r, mu):
    # t_8 = tau + sigma - t_7 with n_8 = -n_7 cancels by reflection,
    # leaving the six-parameter integral whose value is known in closed form
    p = params(r)
    ps = sample_param_sets(p, mu, count=1)[0]
    t7 = 0.13 + 0.3j * (p.tau + p.sigma).imag
    vp = VParams(ps.s + (t7, p.tau + p.sigma - t7), ps.two_n + (2 + mu, -2 - mu), p, mu)
    assert abs(v_function(vp).value / beta_rhs(ps, "additive") - 1) < 1e-12


def test_sampler_balancing_and_flip():
    p = params(2)
    for flip in (False, True):
        for vp in sample_vparams(p, 0, count=2, flip=flip):
            vp.check(tol=1e-14)
            assert (e7_map(vp).two_mu != vp.two_mu) == flip
            assert min(x.imag for x in e7_map(vp).t) > 0.04


def test_validation():
    p = params(2)
    vp = sample_vparams(p, 0, count=1)[0]
    with pytest.raises(ValueError):
        VParams(vp.t[:7], vp.two_n[:7], p)
    with pytest.raises(ParityError):
        VParams(vp.t, (1,) + vp.two_n[1:], p)
    with pytest.raises(BalancingError):
        VParams((vp.t[0] + 0.01,) + vp.t[1:], vp.two_n, p).check()
    with pytest.raises(BalancingError):
        VParams(vp.t, (vp.two_n[0] + 2,) + vp.two_n[1:], p).check()
    with pytest.raises(DomainError):
        VParams((vp.t[0] - 1j,) + vp.t[1:7] + (vp.t[7] + 1j,), vp.two_n, p).check()


def test_e7_map_involution_exact():
    for r, mu in ((1, 0), (2, 0), (2, 1), (3, 1)):
        for vp in sample_vparams(params(r), mu, count=3):
            back = e7_map(e7_map(vp))
            assert back.two_n == vp.two_n and back.two_mu == vp.two_mu
            assert max(abs(a - b) for a, b in zip(back.t, vp.t)) < 1e-15
            e7_map(vp).check(tol=1e-14)


def test_kernel_symmetric_in_u():
    vp = sample_vparams(params(2), 1, count=1)[0]
    u = np.array([0.17 + 0.01j, -0.41])
    for two_m in (1, 3):
        a = v_kernel(u, two_m, vp)
        assert np.max(np.abs(v_kernel(-u, -two_m, vp) / a - 1)) < 1e-12
        assert np.max(np.abs(v_kernel(u + 1, two_m, vp) / a - 1)) < 1e-12


def test_permutation_invariance():
    vp = sample_vparams(params(2), 0, count=1)[0]
    g = SpinGrid(CircleGrid(128), 2, 0)
    ref = v_function(vp, g).value
    assert abs(v_function(vp.permuted((7, 6, 5, 4, 3, 2, 1, 0)), g).value / ref - 1) < 1e-12


@pytest.mark.parametrize("r,mu", [(1, 0), (2, 0), (2, 1)])
@pytest.mark.parametrize("flip", [False, True])
def test_e7_transformation(r, mu, flip):
    if r == 1 and flip:
        # r = 1 has no label parity to flip but the map is still checked
        flip = None
    vp = sample_vparams(params(r), mu, count=1, flip=flip)[0]
    res = verify_e7(vp)
    assert res.passed, res.residual
    assert res.residual < 1e-7


def test_e7_suite_contains_flip_case():
    out = e7(r=2, count=1)
    assert any(res.params["flip"] for res in out)
    for res in out:
        assert res.passed and res.params["involution"]
