import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rarefied.errors import ContourPinchError, ConvergenceError, NodeSingularityError, PeriodicityError
from rarefied.quadrature import (CircleGrid, Detour, GridOperator, SpinGrid, build_operator, detour_integral,
                                 integrate_sum, periodicity_probe, pole_margin, reduce_symmetric_sum, refine_until,
                                 require_margin, symmetrizer)


def grid(n=32, r=1, two_mu=0, **kw):
    return SpinGrid(CircleGrid(n, **kw), r, two_mu)


def test_circle_grid_nodes():
    c = CircleGrid(8, 1.0, 0.25)
    assert np.allclose(c.nodes.real, 0.25 + np.arange(8) / 8)
    assert c.weight == 1 / 8
    c2 = CircleGrid(4, radius=math.exp(-2 * math.pi * 0.1))
    assert abs(c2.shift - 0.1) < 1e-15
    assert np.allclose(np.abs(c2.z_nodes), c2.radius)


def test_circle_grid_validation():
    with pytest.raises(ValueError):
        CircleGrid(6 + 1)
    with pytest.raises(ValueError):
        CircleGrid(8, radius=0)
    with pytest.raises(ValueError):
        CircleGrid(8, phase_offset=1.0)
    CircleGrid(24)


def test_spin_grid_labels():
    assert grid(r=3).labels == [0, 2, 4]
    assert grid(r=2, two_mu=1).labels == [1, 3]
    assert grid(8, r=3).size == 24
    with pytest.raises(ValueError):
        SpinGrid(CircleGrid(8), 2, 2)


def test_flat_index_order():
    g = grid(4, r=2)
    u, m = g.flat_points()
    assert list(m) == [0] * 4 + [2] * 4
    assert np.allclose(u[4:], g.circle.nodes)


def test_measure_of_domain():
    res = integrate_sum(lambda u, m: np.ones_like(u), grid(r=3))
    assert abs(res.value - 3) < 1e-15


@pytest.mark.parametrize("k", [1, 2, 5, 31, -7])
def test_trapezoid_exact_on_modes(k):
    res = integrate_sum(lambda u, m: np.exp(2j * math.pi * k * u), grid(32, r=2))
    assert abs(res.value) < 1e-14


def test_alias_mode_is_not_zero():
    res = integrate_sum(lambda u, m: np.exp(2j * math.pi * 32 * u), grid(32))
    assert abs(res.value - 1) < 1e-12


def test_node_singularity_carries_location():
    def kern(u, m):
        out = np.ones_like(u)
        out[3] = np.inf
        return out
    with pytest.raises(NodeSingularityError) as exc:
        integrate_sum(kern, grid(8))
    assert exc.value.location[1] == 3


def pole_kernel(a):
    """``1 / (1 - a e^{2 pi i u})`` integrates to 1 for ``|a| < 1``."""
    return lambda u, m: 1 / (1 - a * np.exp(2j * math.pi * u))


def test_refine_converges_far_pole():
    res = refine_until(pole_kernel(0.2), grid(), 1e-14)
    assert res.n_nodes <= 64
    assert abs(res.value - 1) < 1e-14


def test_refine_near_pole_history_monotone():
    res = refine_until(pole_kernel(0.94), grid(), 1e-12, n_max=4096)
    errs = [abs(v - 1) for _, v in res.history]
    assert res.n_nodes > 64
    assert all(b < a for a, b in zip(errs, errs[1:]) if a > 1e-15)


def test_refine_zero_tolerance_fails():
    with pytest.raises(ConvergenceError) as exc:
        refine_until(pole_kernel(0.2), grid(), 0.0, n_max=256)
    assert [n for n, _ in exc.value.history] == [32, 64, 128, 256]


def test_error_estimate_geometric():
    errs = [integrate_sum(pole_kernel(0.5), grid(n)).error for n in (8, 16, 32)]
    assert errs[1] < errs[0] * 0.1 and errs[2] < errs[1] * 0.01


def test_periodicity_probe():
    periodicity_probe(lambda u, m: np.cos(2 * math.pi * u), [0, 2])
    with pytest.raises(PeriodicityError):
        periodicity_probe(lambda u, m: np.exp(1j * math.pi * u), [0])


def test_detour_picks_residue():
    # residue of 1/u at 0 is 1, so the ccw circle gives 2 pi i
    val = detour_integral(lambda u, m: 1 / u, Detour(0.0, 0.1, 0, 1))
    assert abs(val - 2j * math.pi) < 1e-14


def test_operator_apply_matches_integrate_sum():
    g = grid(16, r=2)
    k2 = lambda uo, mo, ui, mi: np.exp(2j * math.pi * (uo - 2 * ui)) * (1 + mo + 3 * mi)
    op = build_operator(k2, g, g)
    u, m = g.flat_points()
    f = np.cos(2 * math.pi * u) + 0.3 * m
    out = op.apply(f)
    for i in (0, 5, 20):
        direct = integrate_sum(lambda uu, mm: k2(u[i], m[i], uu, mm) * (np.cos(2 * math.pi * uu) + 0.3 * mm), g)
        assert out[i] == pytest.approx(direct.value, abs=1e-14)


def test_operator_composition_vs_nested_quadrature():
    # K_a(u, v) = sum_k a^k e^{2 pi i k (u - v)}, so K_a composed with K_a is K_{a^2}
    a = 0.3
    g = grid(32)
    k2 = lambda uo, mo, ui, mi: 1 / (1 - a * np.exp(2j * math.pi * (uo - ui)))
    op = build_operator(k2, g, g)
    comp = op @ op
    ref = build_operator(lambda uo, mo, ui, mi: 1 / (1 - a * a * np.exp(2j * math.pi * (uo - ui))), g, g)
    assert np.max(np.abs(comp.matrix - ref.matrix)) < 1e-14


def test_symmetrizer_idempotent():
    for r, mu in ((1, 0), (2, 0), (3, 1), (2, 1)):
        s = symmetrizer(grid(16, r, mu))
        assert np.max(np.abs((s @ s).matrix - s.matrix)) < 1e-15
    s = symmetrizer(SpinGrid(CircleGrid(16, 1.0, 1 / 32), 2, 0))
    assert np.max(np.abs((s @ s).matrix - s.matrix)) < 1e-15


def test_symmetrizer_rejects_unsymmetric_grid():
    with pytest.raises(ValueError):
        symmetrizer(grid(16, radius=0.9))


def test_identity_and_diagonal():
    g = grid(4, 2)
    v = np.arange(8, dtype=complex)
    assert np.array_equal(GridOperator.identity(g).apply(v), v)
    assert np.array_equal(GridOperator.diagonal(g, v).apply(np.ones(8)), v)


def test_reduce_examples():
    c0, c1, c2 = 1.5, 2.0 + 1j, -0.7
    assert reduce_symmetric_sum([c0, c1, c2, c1], 4, 0) == c0 + c2 + 2 * c1
    assert reduce_symmetric_sum([c0, c1, c1], 3, 0) == c0 + 2 * c1
    assert reduce_symmetric_sum([c0, c1, c0], 3, 1) == c1 + 2 * c0
    with pytest.raises(ValueError):
        reduce_symmetric_sum([1, 2], 3)


@settings(max_examples=50, deadline=None)
@given(r=st.integers(1, 7), two_mu=st.integers(0, 1), seed=st.integers(0, 2 ** 31))
def test_reduce_matches_plain_sum(r, two_mu, seed):
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=r) + 1j * rng.normal(size=r)
    labels = [2 * i + two_mu for i in range(r)]
    c = [raw[i] + raw[labels.index((-m) % (2 * r))] for i, m in enumerate(labels)]
    folded, plain = reduce_symmetric_sum(c, r, two_mu, verify=True)
    assert abs(folded - plain) < 1e-13


def test_pole_margin_examples():
    c = CircleGrid(8)
    assert pole_margin([[0.5, 0.5j]], c) == pytest.approx(0.5)
    assert pole_margin([[1 + 1e-4]], c) == pytest.approx(1e-4)
    with pytest.raises(ContourPinchError):
        require_margin([[1 + 1e-4]], c)
    assert pole_margin([[1e-3, 1e3]], c) == math.inf
