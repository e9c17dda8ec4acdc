"""The rarefied V-function (eight parameters) and its W(E7) transformation."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .core import DEFAULT_POLICY, TruncationPolicy
from .errors import BalancingError, DomainError, ParityError
from .gamma import BaseParams, gamma_periodic, inv_gamma_pm2
from .quadrature import CircleGrid, QuadResult, SpinGrid, integrate_sum, periodicity_probe, refine_until
from .residual import Residual

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class VParams:
    """Eight additive pairs ``(t_a, n_a)``; ``two_n`` holds ``2 n_a``, ``two_mu`` the label parity."""

    t: tuple
    two_n: tuple
    params: BaseParams
    two_mu: int = 0

    def __post_init__(self):
        t = tuple(complex(x) for x in self.t)
        n = tuple(int(x) for x in self.two_n)
        if len(t) != 8 or len(n) != 8:
            raise ValueError("V takes eight parameter pairs")
        if any((x - self.two_mu) % 2 for x in n):
            raise ParityError("every n_a must lie in Z + mu")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "two_n", n)

    def check(self, tol: float = 1e-12):
        p = self.params
        if any(not x.imag > 0 for x in self.t):
            raise DomainError("need Im(t_a) > 0")
        if abs(sum(self.t) - 2 * (p.tau + p.sigma)) > tol:
            raise BalancingError("sum t_a must equal 2 (tau + sigma)")
        if sum(self.two_n) % (2 * p.r):
            raise BalancingError("sum n_a must vanish mod r")

    def permuted(self, perm) -> "VParams":
        perm = list(perm)
        return replace(self, t=tuple(self.t[i] for i in perm), two_n=tuple(self.two_n[i] for i in perm))


def v_kernel(u, two_m: int, vp: VParams, policy: TruncationPolicy = DEFAULT_POLICY):
    p = vp.params
    u = np.asarray(u, dtype=complex)
    val = inv_gamma_pm2(u, two_m, p, policy)
    for ta, na in zip(vp.t, vp.two_n):
        val = val * gamma_periodic(ta + u, na + two_m, p, policy) * gamma_periodic(ta - u, na - two_m, p, policy)
    return val


def v_function(vp: VParams, grid: SpinGrid | None = None, *, rel_tol: float = 1e-11, n_max: int = 1024,
               policy: TruncationPolicy = DEFAULT_POLICY) -> QuadResult:
    """``kappa sum_m int prod_a Gamma(t_a +- u, n_a +- m) / Gamma(+-2u, +-2m) du``."""
    vp.check()
    p = vp.params
    kernel = lambda u, m: v_kernel(u, m, vp, policy)
    base = grid or SpinGrid(CircleGrid(32), p.r, vp.two_mu)
    periodicity_probe(kernel, base.labels)
    res = integrate_sum(kernel, base) if grid is not None else refine_until(kernel, base, rel_tol, n_max)
    kappa = p.kappa(policy)
    return QuadResult(kappa * res.value, abs(kappa) * res.error, res.n_nodes,
                      [(n, kappa * v) for n, v in res.history])


def e7_map(vp: VParams) -> VParams:
    """``s_a = t_a + t``, ``s_{a+4} = t_{a+4} - t`` with ``t = (sigma + tau - sum_{b<=4} t_b) / 2``,
    and ``k_a = n_a + n``, ``k_{a+4} = n_{a+4} - n`` with ``n = -sum_{b<=4} n_b / 2``.

    When ``sum_{b<=4} n_b`` is odd the label parity flips.
    """
    p = vp.params
    t = 0.5 * (p.tau + p.sigma - sum(vp.t[:4]))
    two_n = -sum(vp.two_n[:4]) // 2
    s = tuple(x + t for x in vp.t[:4]) + tuple(x - t for x in vp.t[4:])
    k = tuple(x + two_n for x in vp.two_n[:4]) + tuple(x - two_n for x in vp.two_n[4:])
    return VParams(s, k, p, (vp.two_mu + two_n) % 2)


def e7_prefactor(vp: VParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``prod_{b<c<=4} Gamma(t_b + t_c, n_b + n_c) Gamma(t_{b+4} + t_{c+4}, n_{b+4} + n_{c+4})``."""
    p = vp.params
    val = 1 + 0j
    for b, c in itertools.combinations(range(4), 2):
        val *= gamma_periodic(vp.t[b] + vp.t[c], vp.two_n[b] + vp.two_n[c], p, policy)
        val *= gamma_periodic(vp.t[b + 4] + vp.t[c + 4], vp.two_n[b + 4] + vp.two_n[c + 4], p, policy)
    return complex(val)


def verify_e7(vp: VParams, grid: SpinGrid | None = None, tolerance: float = 1e-7, **kw) -> Residual:
    mapped = e7_map(vp)
    lhs = v_function(vp, grid, **kw)
    rhs_v = v_function(mapped, grid, **kw)
    rhs = e7_prefactor(vp) * rhs_v.value
    return Residual.scalar("e7-transformation", lhs.value, rhs, n_nodes=max(lhs.n_nodes, rhs_v.n_nodes),
                           history=lhs.history, tolerance=tolerance,
                           params={"r": vp.params.r, "t": list(vp.t), "two_n": list(vp.two_n),
                                   "two_mu": vp.two_mu, "mapped_two_mu": mapped.two_mu})


def sample_vparams(params: BaseParams, two_mu: int = 0, count: int = 4, seed: int = DEFAULT_SEED,
                   flip: bool | None = None, min_imag: float = 0.04, window: int = 1):
    """Fixed-seed balanced sets whose image under ``e7_map`` also has ``Im > min_imag``.

    ``flip`` selects sets with ``sum_{b<=4} n_b`` odd (True), even (False) or either (None).
    """
    rng = np.random.default_rng(seed)
    total = 2 * (params.tau + params.sigma)
    avg = total.imag / 8
    choices = (np.arange(-2 * window - 1, 2 * window + 2, 2) if two_mu else 2 * np.arange(-window, window + 1))
    out = []
    while len(out) < count:
        im = rng.uniform(0.6 * avg, 1.4 * avg, 7)
        re = rng.uniform(-0.5, 0.5, 7)
        t = [complex(a, b) for a, b in zip(re, im)]
        t.append(total - sum(t))
        n = [int(x) for x in rng.choice(choices, 7)]
        n.append(-sum(n))
        vp = VParams(tuple(t), tuple(n), params, two_mu)
        if flip is not None and bool(e7_map(vp).two_mu != two_mu) != flip:
            continue
        if min(x.imag for x in t) < min_imag:
            continue
        if min(x.imag for x in e7_map(vp).t) < min_imag:
            continue
        out.append(vp)
    return out
