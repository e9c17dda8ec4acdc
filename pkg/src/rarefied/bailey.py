"""The rarefied integral Bailey transform ``M(s, n)``, the multiplier ``D`` and Bailey chains.

Spin functions are callables ``f(u, two_m)`` vectorized over ``u``.  The
transform integrates over the label class fixed by the parity rule
``p(n) = p(m) p(k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DEFAULT_POLICY, TruncationPolicy
from .errors import BalancingError, ContourPinchError, DomainError, ParityError
from .gamma import BaseParams, gamma_periodic, inv_gamma_pm2
from .quadrature import (CircleGrid, GridOperator, QuadResult, SpinGrid, build_operator, integrate_sum,
                         best_line, periodicity_probe, plan_detours, refine_until, symmetrizer)
from .residual import Residual, rel_error

SpinFunction = Callable[[np.ndarray, int], np.ndarray]


def tilde(two_k: int, r: int) -> int:
    """Label ``k~``: ``r - k`` for ``k > 0`` and ``0`` for ``k = 0``, as a doubled value."""
    two_k = int(two_k) % (2 * r)
    return 0 if two_k == 0 else 2 * r - two_k


def _parity(two_x: int) -> int:
    return int(two_x) % 2


def integration_parity(two_n: int, two_k: int) -> int:
    """``2 mu`` of the summation label from ``p(n) = p(m) p(k)``."""
    return (int(two_n) - int(two_k)) % 2


def half_sum(params: BaseParams) -> complex:
    return 0.5 * (params.tau + params.sigma)


def d_coeff(s, two_l: int, y, two_j: int, v, two_k: int, params: BaseParams,
            policy: TruncationPolicy = DEFAULT_POLICY):
    """``D(s, l; y, j; v, k) = Gamma((tau + sigma)/2 - s +- y +- v, -l +- j +- k)``."""
    if _parity(two_l) != (_parity(two_j) + _parity(two_k)) % 2:
        raise ParityError("D needs p(l) = p(j) p(k)")
    c = half_sum(params) - s
    y = np.asarray(y, dtype=complex)
    v = np.asarray(v, dtype=complex)
    val = 1 + 0j
    for e in (1, -1):
        for d in (1, -1):
            val = val * gamma_periodic(c + e * y + d * v, -two_l + e * two_j + d * two_k, params, policy)
    return val


def m_kernel(s, two_n: int, v, two_k: int, u, two_m: int, params: BaseParams,
             policy: TruncationPolicy = DEFAULT_POLICY):
    """``kappa Gamma(s +- v +- u, n +- k +- m) / (Gamma(2s, 2n) Gamma(+-2u, +-2m))``."""
    v = np.asarray(v, dtype=complex)
    u = np.asarray(u, dtype=complex)
    val = params.kappa(policy) / gamma_periodic(2 * s, 2 * two_n, params, policy) * inv_gamma_pm2(u, two_m, params, policy)
    for e in (1, -1):
        for d in (1, -1):
            val = val * gamma_periodic(s + e * v + d * u, two_n + e * two_k + d * two_m, params, policy)
    return val


def m_factors(s, two_n: int, v, two_k: int, two_m: int):
    """Gamma factors of the transform kernel as functions of the integration variable."""
    return [(s + e * v, d, two_n + e * two_k + d * two_m) for e in (1, -1) for d in (1, -1)]


def _check_contour(s, v):
    s, v = complex(s), complex(v)
    if not ((s + v).imag > 0 and (s - v).imag > 0):
        raise DomainError("the unit-circle transform needs Im(s +- v) > 0")


def m_transform(s, two_n: int, f: SpinFunction, v, two_k: int, params: BaseParams, *,
                n_nodes: int | None = None, rel_tol: float = 1e-12, n_max: int = 4096,
                deform: bool = False, probe: bool = True,
                policy: TruncationPolicy = DEFAULT_POLICY) -> QuadResult:
    """``(M(s, n) f)(v, k)`` on the unit circle.

    With ``deform=True`` poles on the wrong side of the circle are picked up by
    residue circles, which continues the transform beyond ``Im(s +- v) > 0``.
    """
    r = params.r
    two_mu = integration_parity(two_n, two_k)
    labels = SpinGrid(CircleGrid(1), r, two_mu).labels
    y0 = 0.0
    if deform:
        y0 = best_line([m_factors(s, two_n, v, two_k, lab) for lab in labels], params)
    else:
        _check_contour(s, v)
    grid = SpinGrid(CircleGrid(n_nodes or 32, math.exp(-2 * math.pi * y0)), r, two_mu)

    def integrand(u, two_m):
        return m_kernel(s, two_n, v, two_k, u, two_m, params, policy) * f(u, two_m)

    if probe:
        periodicity_probe(integrand, grid.labels)
    detours = []
    if deform:
        for two_m in grid.labels:
            detours += plan_detours(m_factors(s, two_n, v, two_k, two_m), params, two_m, y0)
    if n_nodes:
        return integrate_sum(integrand, grid, detours)
    return refine_until(integrand, grid, rel_tol, n_max, detours=detours)


def m_operator(s, two_n: int, out_grid: SpinGrid, in_grid: SpinGrid, params: BaseParams,
               policy: TruncationPolicy = DEFAULT_POLICY) -> GridOperator:
    """Grid matrix of ``M(s, n)`` between real-line grids; needs ``Im s > 0``."""
    if not complex(s).imag > 0:
        raise DomainError("the grid transform needs Im(s) > 0")
    if (two_n - out_grid.two_mu - in_grid.two_mu) % 2:
        raise ParityError("grid parities violate p(n) = p(m) p(k)")
    return build_operator(lambda vo, ko, ui, mi: m_kernel(s, two_n, vo, ko, ui, mi, params, policy), out_grid, in_grid)


def d_operator(s, two_l: int, y, two_j: int, grid: SpinGrid, params: BaseParams,
               policy: TruncationPolicy = DEFAULT_POLICY) -> GridOperator:
    u, m = grid.flat_points()
    vals = np.concatenate([d_coeff(s, two_l, y, two_j, grid.circle.nodes, lab, params, policy) for lab in grid.labels])
    return GridOperator.diagonal(grid, vals)


@dataclass
class BaileyPair:
    """Functions ``alpha(u, m)`` and ``beta(v, k)`` related by ``beta = M(t, n) alpha``."""

    t: complex
    two_n: int
    alpha: SpinFunction
    beta: SpinFunction
    alpha_parity: int
    beta_parity: int


def bailey_pair_seed(t_a, two_n_a, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY) -> BaileyPair:
    """Explicit pair from the beta integral; ``t`` and ``n`` are fixed by the balancing."""
    t_a = [complex(x) for x in t_a]
    two_n_a = [int(x) for x in two_n_a]
    if len(t_a) != 4 or len(two_n_a) != 4:
        raise ValueError("the seed pair takes four parameter pairs")
    if len({x % 2 for x in two_n_a}) != 1:
        raise ParityError("n_1..n_4 must share one parity class")
    if sum(two_n_a) % 2:
        raise BalancingError("sum n_a must be even so that n = -sum/2 is a half-integer multiple")
    t = half_sum(params) - 0.5 * sum(t_a)
    two_n = -sum(two_n_a) // 2
    if not t.imag > 0:
        raise BalancingError("balancing gives Im(t) <= 0")
    pref = 1 + 0j
    for a in range(4):
        for b in range(a + 1, 4):
            pref *= gamma_periodic(t_a[a] + t_a[b], two_n_a[a] + two_n_a[b], params, policy)

    def alpha(u, two_m):
        u = np.asarray(u, dtype=complex)
        val = 1 + 0j
        for ta, na in zip(t_a, two_n_a):
            val = val * gamma_periodic(ta + u, na + two_m, params, policy) * gamma_periodic(ta - u, na - two_m, params, policy)
        return val

    def beta(x, two_j):
        x = np.asarray(x, dtype=complex)
        val = pref
        for ta, na in zip(t_a, two_n_a):
            val = val * (gamma_periodic(t + x + ta, two_n + two_j + na, params, policy)
                         * gamma_periodic(t - x + ta, two_n - two_j + na, params, policy))
        return val

    a_par = two_n_a[0] % 2
    return BaileyPair(t, two_n, alpha, beta, a_par, (two_n - a_par) % 2)


def chain_step(pair: BaileyPair, s, two_l: int, y, two_j: int, params: BaseParams, *,
               n_nodes: int | None = None, deform: bool = False,
               policy: TruncationPolicy = DEFAULT_POLICY) -> BaileyPair:
    """New pair for ``(s + t, l + n)``: ``alpha' = D(s, l) alpha`` and
    ``beta' = D(-t, -n) M(s, l) D(s + t, l + n) beta``.

    ``deform=True`` evaluates the transform with residue circles, as needed for
    ``Im s < 0`` or for complex evaluation points.
    """
    t, two_n = pair.t, pair.two_n
    if (_parity(two_l) + _parity(two_j) + pair.alpha_parity) % 2:
        raise ParityError("chain step needs p(l) = p(j) p(k) on the alpha labels")

    def alpha2(v, two_k):
        return d_coeff(s, two_l, y, two_j, v, two_k, params, policy) * pair.alpha(v, two_k)

    def inner(x, two_m):
        return d_coeff(s + t, two_l + two_n, y, two_j, x, two_m, params, policy) * pair.beta(x, two_m)

    def beta2(v, two_k):
        vs = np.atleast_1d(np.asarray(v, dtype=complex))
        out = np.empty(vs.shape, dtype=complex)
        for i, vv in enumerate(vs):
            res = m_transform(s, two_l, inner, vv, two_k, params, n_nodes=n_nodes, deform=deform, policy=policy)
            out[i] = d_coeff(-t, -two_n, y, two_j, vv, two_k, params, policy) * res.value
        return out if np.ndim(v) else complex(out[0])

    beta_par = (pair.alpha_parity + _parity(two_l + two_n)) % 2
    return BaileyPair(s + t, two_l + two_n, alpha2, beta2, pair.alpha_parity, beta_par)


def bailey_pair_check(pair: BaileyPair, points, params: BaseParams, *, tolerance: float = 1e-8,
                      n_nodes: int | None = None, policy: TruncationPolicy = DEFAULT_POLICY) -> Residual:
    """Max over ``points = [(v, two_k), ...]`` of ``|M(t, n) alpha / beta - 1|``."""
    worst, lhs_all, rhs_all, n_used = 0.0, [], [], 0
    for v, two_k in points:
        res = m_transform(pair.t, pair.two_n, pair.alpha, v, two_k, params, n_nodes=n_nodes, policy=policy)
        rhs = complex(pair.beta(v, two_k))
        lhs_all.append(res.value)
        rhs_all.append(rhs)
        worst = max(worst, rel_error(res.value, rhs))
        n_used = max(n_used, res.n_nodes)
    return Residual("bailey-pair", lhs_all, rhs_all, worst, n_used, tolerance=tolerance,
                    params={"t": pair.t, "two_n": pair.two_n, "points": list(points)})


def str_labels(two_mu_a: int, two_n: int, two_l: int, two_j: int):
    """Label parities ``(a, m, k)`` for the operator star-triangle relation."""
    two_mu_m = (two_n + two_mu_a) % 2
    two_mu_k = (two_l + two_mu_m) % 2
    if (two_n - two_j - two_mu_k) % 2:
        raise ParityError("parities violate p(m) = p(a) p(k) p(j)")
    return two_mu_a, two_mu_m, two_mu_k


def str_operator_check(s, two_l: int, t, two_n: int, y, two_j: int, params: BaseParams, *,
                       n_nodes: int = 64, two_mu_a: int = 0, io_nodes: int | None = None,
                       tolerance: float = 1e-6, policy: TruncationPolicy = DEFAULT_POLICY) -> Residual:
    """``M(s,l) D(s+t,l+n) M(t,n)`` against ``D(t,n) M(s+t,l+n) D(s,l)`` on the symmetric subspace.

    Only the middle variable is a quadrature grid; input and output grids just
    sample the kernels (``io_nodes`` points each).
    """
    r = params.r
    mu_a, mu_m, mu_k = str_labels(two_mu_a, two_n, two_l, two_j)
    nio = io_nodes or 16
    g_u = SpinGrid(CircleGrid(nio, 1.0, 0.5 / nio), r, mu_a)
    g_v = SpinGrid(CircleGrid(nio, 1.0, 0.5 / nio), r, mu_k)
    g_x = SpinGrid(CircleGrid(n_nodes), r, mu_m)
    lhs = (m_operator(s, two_l, g_v, g_x, params, policy)
           @ d_operator(s + t, two_l + two_n, y, two_j, g_x, params, policy)
           @ m_operator(t, two_n, g_x, g_u, params, policy))
    rhs = (d_operator(t, two_n, y, two_j, g_v, params, policy)
           @ m_operator(s + t, two_l + two_n, g_v, g_u, params, policy)
           @ d_operator(s, two_l, y, two_j, g_u, params, policy))
    sym = symmetrizer(g_u)
    a = (lhs @ sym).matrix
    b = (rhs @ sym).matrix
    res = float(np.linalg.norm(a - b, 2) / np.linalg.norm(b, 2))
    return Residual("operator-star-triangle", None, None, res, n_nodes, tolerance=tolerance,
                    params={"r": r, "s": s, "two_l": two_l, "t": t, "two_n": two_n, "y": y, "two_j": two_j,
                            "two_mu_a": two_mu_a})


def pinch_distance(t, params: BaseParams, depth: int = 6) -> float:
    """Distance of ``2t`` to the lattice ``Z + tau Z + sigma Z`` (nearby points only)."""
    a = np.arange(-depth, depth + 1)
    lat = (params.tau * a[:, None] + params.sigma * a[None, :]).ravel()
    d = 2 * complex(t) - lat
    d = d - np.round(d.real)
    return float(np.min(np.abs(d)))


def minv_guard(t, params: BaseParams, delta: float = 1e-3) -> float:
    dist = pinch_distance(t, params)
    if dist < delta:
        raise ContourPinchError(f"2t lies within {dist:.3g} of the period lattice", margin=dist)
    return dist


def m_apply_deformed(t, two_n: int, f: SpinFunction, u, two_m: int, params: BaseParams, n_nodes: int,
                     policy: TruncationPolicy = DEFAULT_POLICY):
    """``(M(t, n) f)(u, m)`` for an array of points ``u`` via residue-corrected line quadrature."""
    r = params.r
    two_mu = integration_parity(two_n, two_m)
    grid = SpinGrid(CircleGrid(n_nodes), r, two_mu)
    x = grid.circle.nodes
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    out = np.zeros(u.shape, dtype=complex)
    for two_l in grid.labels:
        kern = m_kernel(t, two_n, u[:, None], two_m, x[None, :], two_l, params, policy)
        out += (kern * f(x, two_l)[None, :]).mean(axis=1)
    for i, uu in enumerate(u):
        for two_l in grid.labels:
            for d in plan_detours(m_factors(t, two_n, uu, two_m, two_l), params, two_l):
                th = 2 * math.pi * np.arange(d.n_points) / d.n_points
                e = np.exp(1j * th)
                xs = d.center + d.radius * e
                vals = m_kernel(t, two_n, uu, two_m, xs, two_l, params, policy) * f(xs, two_l)
                out[i] += d.sign * np.mean(vals * 1j * d.radius * e) * 2 * math.pi
    return out


def m_inversion_check(t, two_n: int, f: SpinFunction, points, params: BaseParams, *, two_mu_f: int = 0,
                      n_nodes: int = 256, tolerance: float = 1e-4,
                      policy: TruncationPolicy = DEFAULT_POLICY) -> Residual:
    """``M(-t, -n) M(t, n) f`` against ``(f(v, k) + f(-v, k~)) / 2`` at ``points = [(v, two_k)]``."""
    minv_guard(t, params)
    r = params.r
    worst, lhs_all, rhs_all = 0.0, [], []
    for v, two_k in points:
        if (two_k - two_mu_f) % 2:
            raise ParityError("output labels must share the parity of the input labels")
        two_mu_m = integration_parity(two_n, two_k)
        g_m = SpinGrid(CircleGrid(n_nodes), r, two_mu_m)
        u = g_m.circle.nodes
        total = 0j
        outer_det = []
        for two_m in g_m.labels:
            inner = m_apply_deformed(t, two_n, f, u, two_m, params, n_nodes, policy)
            total += np.mean(m_kernel(-t, -two_n, v, two_k, u, two_m, params, policy) * inner)
            outer_det += plan_detours(m_factors(-t, -two_n, v, two_k, two_m), params, two_m)
        for d in outer_det:
            th = 2 * math.pi * np.arange(d.n_points) / d.n_points
            e = np.exp(1j * th)
            us = d.center + d.radius * e
            inner = m_apply_deformed(t, two_n, f, us, d.two_m, params, n_nodes, policy)
            vals = m_kernel(-t, -two_n, v, two_k, us, d.two_m, params, policy) * inner
            total += d.sign * np.mean(vals * 1j * d.radius * e) * 2 * math.pi
        rhs = 0.5 * (complex(f(np.asarray(v, dtype=complex), two_k)) + complex(f(-np.asarray(v, dtype=complex), tilde(two_k, r))))
        lhs_all.append(complex(total))
        rhs_all.append(rhs)
        worst = max(worst, abs(total - rhs) / max(abs(rhs), 1e-300))
    return Residual("transform-inversion", lhs_all, rhs_all, worst, n_nodes, tolerance=tolerance,
                    params={"r": r, "t": t, "two_n": two_n, "points": list(points)})


def unit_limit(f: SpinFunction, v, two_k: int, params: BaseParams, s_values=(0.01j, 0.005j, 0.0025j), *,
               rel_tol: float = 1e-12, n_max: int = 8192, policy: TruncationPolicy = DEFAULT_POLICY):
    """Deviations ``|M(s, 0) f - (f(v, k) + f(-v, k~)) / 2|`` for shrinking ``s``.

    Returns the list of deviations and the successive ratios.
    """
    r = params.r
    target = 0.5 * (complex(f(np.asarray(v, dtype=complex), two_k)) + complex(f(-np.asarray(v, dtype=complex), tilde(two_k, r))))
    devs = []
    for s in s_values:
        res = m_transform(s, 0, f, v, two_k, params, rel_tol=rel_tol, n_max=n_max, n_nodes=None, policy=policy)
        devs.append(abs(res.value - target))
    ratios = [devs[i + 1] / devs[i] for i in range(len(devs) - 1)]
    return devs, ratios


def fourier_test_function(r: int, two_mu: int, n_modes: int = 3, seed: int = 11, symmetric: bool = True) -> SpinFunction:
    """Truncated Fourier sum with label-dependent coefficients, optionally symmetrized."""
    rng = np.random.default_rng(seed)
    modes = np.arange(-n_modes, n_modes + 1)
    coef = {2 * i + two_mu: (rng.normal(size=modes.size) + 1j * rng.normal(size=modes.size)) / (1 + modes ** 2)
            for i in range(r)}

    def raw(u, two_m):
        u = np.asarray(u, dtype=complex)
        c = coef[int(two_m) % (2 * r)]
        return np.tensordot(np.exp(2j * math.pi * np.multiply.outer(u, modes)), c, axes=([-1], [0]))

    if not symmetric:
        return raw

    def sym(u, two_m):
        u = np.asarray(u, dtype=complex)
        return 0.5 * (raw(u, two_m) + raw(-u, (-int(two_m)) % (2 * r)))

    return sym
