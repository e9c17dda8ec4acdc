"""The rarefied elliptic beta integral in the quasiperiodic and periodic normalizations."""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .core import DEFAULT_POLICY, TruncationPolicy
from .errors import BalancingError, ContourPinchError, DomainError, ParityError
from .gamma import (TWO_PI_I, BaseParams, factor_poles, gamma_periodic, gamma_r_norm, inv_gamma_pm2,
                    inv_gamma_r_norm_pm2)
from .quadrature import CircleGrid, QuadResult, SpinGrid, integrate_sum, reduce_symmetric_sum, refine_until, separating_margin
from .residual import Residual

DEFAULT_SEED = 0x5EED
BALANCE_TOL = 1e-12
MARGIN_DELTA = 1e-3


@dataclass(frozen=True)
class ParamSet:
    """Pairs ``(s_a, n_a)`` with ``t_a = e^{2 pi i s_a}``; ``two_n`` holds ``2 n_a``.

    ``two_mu`` is the parity of the integration label; every ``n_a`` lies in ``Z + mu``.
    """

    s: tuple
    two_n: tuple
    params: BaseParams
    two_mu: int = 0

    def __post_init__(self):
        s = tuple(complex(x) for x in self.s)
        n = tuple(int(x) for x in self.two_n)
        if len(s) != len(n):
            raise ValueError("s and two_n need equal length")
        if self.two_mu not in (0, 1):
            raise ValueError("two_mu must be 0 or 1")
        if any((x - self.two_mu) % 2 for x in n):
            raise ParityError("every n_a must lie in Z + mu")
        if any(not x.imag > 0 for x in s):
            raise DomainError("need Im(s_a) > 0, i.e. |t_a| < 1")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "two_n", n)

    @classmethod
    def from_multiplicative(cls, t, two_n, params: BaseParams, two_mu: int = 0) -> "ParamSet":
        """Principal-branch ``s_a``; the last one is shifted by an integer to restore ``sum s_a = tau + sigma``."""
        s = [cmath.log(complex(x)) / TWO_PI_I for x in t]
        excess = sum(s) - (params.tau + params.sigma)
        if abs(excess.imag) < 1e-9 and abs(excess.real - round(excess.real)) < 1e-9:
            s[-1] -= round(excess.real)
        return cls(tuple(s), tuple(two_n), params, two_mu)

    @property
    def t(self) -> tuple:
        return tuple(cmath.exp(TWO_PI_I * x) for x in self.s)

    @property
    def size(self) -> int:
        return len(self.s)

    def check_balancing(self, normalization: str = "multiplicative", tol: float = BALANCE_TOL):
        p = self.params
        if normalization == "multiplicative":
            prod = np.prod(self.t)
            if abs(prod - p.pq) > tol * abs(p.pq):
                raise BalancingError(f"prod t_a = {prod} differs from pq = {p.pq}")
            if sum(self.two_n) != 0:
                raise BalancingError("sum n_a must vanish")
        elif normalization == "additive":
            if abs(sum(self.s) - p.tau - p.sigma) > tol:
                raise BalancingError("sum s_a must equal tau + sigma")
            if sum(self.two_n) % (2 * p.r):
                raise BalancingError("sum n_a must vanish mod r")
        else:
            raise ValueError(f"unknown normalization {normalization!r}")

    def permuted(self, perm) -> "ParamSet":
        perm = list(perm)
        return replace(self, s=tuple(self.s[i] for i in perm), two_n=tuple(self.two_n[i] for i in perm))


def sample_param_sets(params: BaseParams, two_mu: int = 0, count: int = 20, seed: int = DEFAULT_SEED,
                      window: int = 1):
    """Fixed-seed balanced six-parameter sets.

    ``|t_a|`` in [0.3, 0.7] with random phases for a <= 5, ``t_6 = pq / prod`` with
    ``|t_6|`` in [0.05, 0.9]; ``n_1..n_5`` uniform in ``Z + mu`` within ``window``
    of zero, ``n_6 = -sum``.
    """
    rng = np.random.default_rng(seed)
    out = []
    if two_mu:
        choices = np.arange(-2 * window - 1, 2 * window + 2, 2)
    else:
        choices = 2 * np.arange(-window, window + 1)
    while len(out) < count:
        mods = rng.uniform(0.3, 0.7, 5)
        phases = rng.uniform(0, 1, 5)
        two_n = [int(x) for x in rng.choice(choices, 5)]
        s = [ph + 1j * (-math.log(md) / (2 * math.pi)) for md, ph in zip(mods, phases)]
        s6 = params.tau + params.sigma - sum(s)
        if not 0.05 <= abs(cmath.exp(TWO_PI_I * s6)) <= 0.9:
            continue
        two_n.append(-sum(two_n))
        ps = ParamSet(tuple(s) + (s6,), tuple(two_n), params, two_mu)
        try:
            contour_margin(ps)
        except ContourPinchError:
            continue
        out.append(ps)
    return out


def kernel_rho_add(u, two_m: int, pset: ParamSet, policy: TruncationPolicy = DEFAULT_POLICY):
    """``prod_a Gamma(s_a +- u, n_a +- m) / Gamma(+-2u, +-2m)`` with periodic gammas."""
    p = pset.params
    u = np.asarray(u, dtype=complex)
    val = inv_gamma_pm2(u, two_m, p, policy)
    for sa, na in zip(pset.s, pset.two_n):
        val = val * gamma_periodic(sa + u, na + two_m, p, policy) * gamma_periodic(sa - u, na - two_m, p, policy)
    return val


def kernel_rho_mult(z, two_m: int, pset: ParamSet, policy: TruncationPolicy = DEFAULT_POLICY):
    """``prod_a Gamma^(r)(t_a z^{+-1}, n_a +- m) / Gamma^(r)(z^{+-2}, +-2m)``, normalized gammas."""
    p = pset.params
    z = np.asarray(z, dtype=complex)
    val = inv_gamma_r_norm_pm2(z, two_m, p, policy)
    for ta, na in zip(pset.t, pset.two_n):
        val = val * gamma_r_norm(ta * z, na + two_m, p, policy) * gamma_r_norm(ta / z, na - two_m, p, policy)
    return val


def _kernel(pset, normalization, policy):
    if normalization == "additive":
        return lambda u, m: kernel_rho_add(u, m, pset, policy)
    if normalization == "multiplicative":
        return lambda u, m: kernel_rho_mult(np.exp(TWO_PI_I * np.asarray(u, dtype=complex)), m, pset, policy)
    raise ValueError(f"unknown normalization {normalization!r}")


def contour_margin(pset: ParamSet, labels=None, radius: float = 1.0, delta: float = MARGIN_DELTA) -> float:
    """Signed separation of the in/out pole families from ``|z| = radius``; raises below ``delta``."""
    r = pset.params.r
    labels = labels if labels is not None else [2 * k + pset.two_mu for k in range(r)]
    inner, outer = [], []
    for two_m in labels:
        for sa, na in zip(pset.s, pset.two_n):
            inner.append(factor_poles(sa, -1, na - two_m, pset.params, limit=40))
            outer.append(factor_poles(sa, 1, na + two_m, pset.params, limit=40))
    margin = separating_margin(np.concatenate(inner), np.concatenate(outer), radius)
    if margin < delta:
        raise ContourPinchError(f"pole margin {margin:.3g} below {delta:g}", margin=margin)
    return margin


def beta_lhs(pset: ParamSet, grid: SpinGrid | None = None, normalization: str = "additive", *,
             rel_tol: float = 1e-10, n_max: int = 512, fold: bool = False,
             policy: TruncationPolicy = DEFAULT_POLICY) -> QuadResult:
    """``kappa sum_m int rho du``; fixed grid if given, otherwise refinement up to ``n_max``."""
    pset.check_balancing(normalization)
    if pset.size != 6:
        raise ValueError("the beta integral takes six parameter pairs")
    contour_margin(pset)
    p = pset.params
    kernel = _kernel(pset, normalization, policy)
    kappa = p.kappa(policy)
    base = grid if grid is not None else SpinGrid(CircleGrid(32), p.r, pset.two_mu)
    if fold:
        per_label = []
        n_used, err = 0, 0.0
        for two_m in base.labels:
            sub = SpinGrid(base.circle, 1, 0)
            k1 = lambda u, _m, two_m=two_m: kernel(u, two_m)
            res = integrate_sum(k1, sub) if grid is not None else refine_until(k1, sub, rel_tol, n_max)
            per_label.append(res.value)
            n_used, err = max(n_used, res.n_nodes), max(err, res.error)
        val = reduce_symmetric_sum(per_label, p.r, pset.two_mu)
        return QuadResult(kappa * val, abs(kappa) * err, n_used, [])
    res = integrate_sum(kernel, base) if grid is not None else refine_until(kernel, base, rel_tol, n_max)
    hist = [(n, kappa * v) for n, v in res.history]
    return QuadResult(kappa * res.value, abs(kappa) * res.error, res.n_nodes, hist)


def beta_rhs(pset: ParamSet, normalization: str = "additive", policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Product over the 15 pairs ``a < b`` of ``Gamma(s_a + s_b, n_a + n_b)``."""
    p = pset.params
    val = 1 + 0j
    for a, b in itertools.combinations(range(pset.size), 2):
        nab = pset.two_n[a] + pset.two_n[b]
        if normalization == "additive":
            val *= gamma_periodic(pset.s[a] + pset.s[b], nab, p, policy)
        else:
            val *= gamma_r_norm(pset.t[a] * pset.t[b], nab, p, policy)
    return complex(val)


def verify_beta(pset: ParamSet, grid: SpinGrid | None = None, normalization: str = "additive",
                tolerance: float = 1e-8, **kw) -> Residual:
    lhs = beta_lhs(pset, grid, normalization, **kw)
    rhs = beta_rhs(pset, normalization)
    res = Residual.scalar("beta-integral", lhs.value, rhs, n_nodes=lhs.n_nodes, history=lhs.history,
                          tolerance=tolerance, params=describe(pset, normalization))
    return res


def describe(pset: ParamSet, normalization: str = "additive") -> dict:
    p = pset.params
    return {"r": p.r, "tau": p.tau, "sigma": p.sigma, "two_mu": pset.two_mu, "s": list(pset.s),
            "two_n": list(pset.two_n), "normalization": normalization}
