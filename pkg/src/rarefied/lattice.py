"""Lattice spin model built on the transform kernel: Boltzmann weights, self-energy,
star-triangle relations, the normalization ``m(alpha, 0)`` and small partition functions.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bailey import d_coeff
from .beta import ParamSet, beta_lhs
from .core import DEFAULT_POLICY, TruncationPolicy, ell_gamma2
from .errors import ResourceLimitError, UnsupportedNormalizationError
from .gamma import BaseParams, gamma_periodic, inv_gamma_pm2, inv_gamma_pm2_display
from .quadrature import CircleGrid, SpinGrid
from .residual import Residual

MAX_SITES = 9


@dataclass(frozen=True)
class Rapidity:
    """Continuous rapidity ``alpha`` and doubled discrete rapidity ``two_l``."""

    alpha: complex
    two_l: int = 0

    def physical(self, params: BaseParams) -> bool:
        """``q = conj(p)`` and ``alpha`` real in ``(0, eta)``."""
        a = complex(self.alpha)
        eta = complex(params.eta)
        return (params.physical and abs(a.imag) < 1e-15 and abs(eta.imag) < 1e-12
                and 0 < a.real < eta.real and self.two_l == 0)


@dataclass(frozen=True)
class SpinSite:
    x: float
    two_m: int

    def __post_init__(self):
        if not 0 <= self.x < 1:
            raise ValueError("spin x must lie in [0, 1)")


def boltzmann_w(alpha, two_l: int, v, two_k: int, x, two_m: int, params: BaseParams,
                policy: TruncationPolicy = DEFAULT_POLICY):
    """``W_{alpha,l}(v, k; x, m) = Gamma(i(eta - alpha) +- v +- x, -l +- k +- m)``."""
    return d_coeff(1j * alpha, two_l, v, two_k, x, two_m, params, policy)


def self_energy(x, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """``rho(x, m) = (p^r; p^r)(q^r; q^r) / (2 Gamma(+-2x, +-2m))``."""
    return params.kappa(policy) * inv_gamma_pm2(x, two_m, params, policy)


def self_energy_gamma_ratio(x, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """Same quantity from the two gamma functions directly (off their poles)."""
    x = np.asarray(x, dtype=complex)
    den = gamma_periodic(2 * x, 2 * two_m, params, policy) * gamma_periodic(-2 * x, -2 * two_m, params, policy)
    return params.kappa(policy) / den


def self_energy_display(x, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """Compact theta-product form; equal to :func:`self_energy` only for ``m`` in ``{0, r/2}``."""
    return params.kappa(policy) * inv_gamma_pm2_display(x, two_m, params, policy)


def chi_factor(alpha, two_l: int, beta, two_n: int, params: BaseParams,
               policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``Gamma(2i alpha, 2l) Gamma(2i beta, 2n) Gamma(2i(eta - alpha - beta), -2l - 2n)``."""
    eta = params.eta
    return complex(gamma_periodic(2j * alpha, 2 * two_l, params, policy)
                   * gamma_periodic(2j * beta, 2 * two_n, params, policy)
                   * gamma_periodic(2j * (eta - alpha - beta), -2 * two_l - 2 * two_n, params, policy))


def star_param_set(alpha, two_l, beta, two_n, spins, params: BaseParams, two_mu: int) -> ParamSet:
    """The six beta-integral parameters hidden in the star side of the relation."""
    (v, two_k), (y, two_j), (z, two_h) = spins
    eta = params.eta
    c = (1j * alpha, 1j * (eta - alpha - beta), 1j * beta)
    pts = (v, y, z)
    d = (two_l, -two_l - two_n, two_n)
    lab = (two_k, two_j, two_h)
    s, n = [], []
    for ci, pi, di, li in zip(c, pts, d, lab):
        s += [ci + pi, ci - pi]
        n += [di + li, di - li]
    return ParamSet(tuple(s), tuple(n), params, two_mu)


def str_star(alpha, two_l, beta, two_n, spins, params: BaseParams, two_mu: int, *, n_nodes: int | None = None,
             normalized: bool = False, policy: TruncationPolicy = DEFAULT_POLICY):
    """``sum_m int rho W_{eta-alpha,-l}(v;x) W_{alpha+beta,l+n}(y;x) W_{eta-beta,-n}(z;x) dx`` on a grid."""
    (v, two_k), (y, two_j), (z, two_h) = spins
    eta = params.eta
    grid = SpinGrid(CircleGrid(n_nodes or 64), params.r, two_mu)
    x = grid.circle.nodes
    total = 0j
    for two_m in grid.labels:
        val = (self_energy(x, two_m, params, policy)
               * boltzmann_w(eta - alpha, -two_l, v, two_k, x, two_m, params, policy)
               * boltzmann_w(alpha + beta, two_l + two_n, y, two_j, x, two_m, params, policy)
               * boltzmann_w(eta - beta, -two_n, z, two_h, x, two_m, params, policy))
        total += np.mean(val)
    if normalized:
        total /= norm_m(eta - alpha, params, -two_l) * norm_m(alpha + beta, params, two_l + two_n) * norm_m(eta - beta, params, -two_n)
    return complex(total)


def str_triangle(alpha, two_l, beta, two_n, spins, params: BaseParams, *, normalized: bool = False,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``W_{beta,n}(y;v) W_{eta-alpha-beta,-l-n}(v;z) W_{alpha,l}(y;z)``, times ``chi`` unless normalized."""
    (v, two_k), (y, two_j), (z, two_h) = spins
    eta = params.eta
    val = (boltzmann_w(beta, two_n, y, two_j, v, two_k, params, policy)
           * boltzmann_w(eta - alpha - beta, -two_l - two_n, v, two_k, z, two_h, params, policy)
           * boltzmann_w(alpha, two_l, y, two_j, z, two_h, params, policy))
    if normalized:
        val /= norm_m(beta, params, two_n) * norm_m(eta - alpha - beta, params, -two_l - two_n) * norm_m(alpha, params, two_l)
        return complex(val)
    return complex(chi_factor(alpha, two_l, beta, two_n, params, policy) * val)


def verify_str_functional(alpha, two_l, beta, two_n, spins, params: BaseParams, two_mu: int = 0, *,
                          n_nodes: int | None = None, normalized: bool = False, tolerance: float = 1e-6,
                          policy: TruncationPolicy = DEFAULT_POLICY) -> Residual:
    """Star side against triangle side; ``n_nodes=None`` refines the star integral."""
    rhs = str_triangle(alpha, two_l, beta, two_n, spins, params, normalized=normalized, policy=policy)
    if n_nodes:
        lhs = str_star(alpha, two_l, beta, two_n, spins, params, two_mu, n_nodes=n_nodes,
                       normalized=normalized, policy=policy)
        n_used, hist = n_nodes, []
    else:
        ps = star_param_set(alpha, two_l, beta, two_n, spins, params, two_mu)
        res = beta_lhs(ps, rel_tol=1e-12, n_max=2048, policy=policy)
        lhs = res.value
        if normalized:
            lhs /= (norm_m(params.eta - alpha, params, -two_l) * norm_m(alpha + beta, params, two_l + two_n)
                    * norm_m(params.eta - beta, params, -two_n))
        n_used, hist = res.n_nodes, res.history
    name = "str-normalized" if normalized else "str-functional"
    return Residual.scalar(name, lhs, rhs, n_nodes=n_used, history=hist, tolerance=tolerance,
                           params={"r": params.r, "alpha": alpha, "beta": beta, "two_l": two_l,
                                   "two_n": two_n, "spins": list(spins), "two_mu": two_mu})


def norm_m(alpha, params: BaseParams, two_l: int = 0, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``m(alpha, 0) = Gamma(e^{-4 pi alpha} pq; p^r, q^r, (pq)^2) / Gamma(e^{4 pi alpha} pq; p^r, q^r, (pq)^2)``."""
    if two_l != 0:
        raise UnsupportedNormalizationError("m(alpha, l) is only known for l = 0")
    pq = params.pq
    a = complex(alpha)
    num = ell_gamma2(cmath.exp(-4 * math.pi * a) * pq, params.pr, params.qr, pq * pq, policy)
    den = ell_gamma2(cmath.exp(4 * math.pi * a) * pq, params.pr, params.qr, pq * pq, policy)
    return complex(num / den)


def norm_m_series(alpha, params: BaseParams, n_terms: int | None = None, tol: float = 1e-17) -> complex:
    """Exponential-sum form of ``m(alpha, 0)``, pairing the terms ``n`` and ``-n``.

    Converges for ``|Re alpha| < Re eta``; outside that strip a ``ValueError`` is raised.
    """
    pq, r = params.pq, params.r
    a = complex(alpha)
    x_plus = pq * cmath.exp(4 * math.pi * a)
    x_minus = pq * cmath.exp(-4 * math.pi * a)
    ratio = max(abs(x_plus), abs(x_minus))
    if not ratio < 1:
        raise ValueError("the series form of m(alpha, 0) diverges for |Re alpha| >= Re eta")
    if n_terms is None:
        n_terms = int(math.ceil(math.log(tol) / math.log(ratio))) + 1
    total = 0j
    pr, qr = params.pr, params.qr
    for n in range(1, n_terms + 1):
        f = (1 - pq ** (r * n)) / ((1 - pq ** (2 * n)) * (1 - pr ** n) * (1 - qr ** n))
        total += f / n * (x_plus ** n - x_minus ** n)
    return cmath.exp(total)


def norm_equations(alpha, params: BaseParams) -> tuple[float, float]:
    """Residuals of ``m(eta - a) = Gamma(2ia, 0) m(a)`` and ``m(-a) m(a) = 1``."""
    m_a = norm_m(alpha, params)
    first = abs(norm_m(params.eta - alpha, params) / (gamma_periodic(2j * alpha, 0, params) * m_a) - 1)
    second = abs(norm_m(-alpha, params) * m_a - 1)
    return first, second


def phi_series(alpha, coeffs, eta) -> complex:
    """``phi(alpha) = sum_k c_k sin(pi (2k + 1) alpha / eta)``."""
    total = 0j
    for k, c in enumerate(coeffs):
        total += c * np.sin(math.pi * (2 * k + 1) * alpha / eta)
    return complex(total)


def weight_matrix(alpha, grid: SpinGrid, params: BaseParams, normalized: bool = True,
                  policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``W~_{alpha,0}`` between all pairs of grid points (flat-index order)."""
    x = grid.circle.nodes
    n = grid.n_nodes
    mat = np.empty((grid.size, grid.size), dtype=complex)
    for a, ka in enumerate(grid.labels):
        for b, kb in enumerate(grid.labels):
            mat[a * n:(a + 1) * n, b * n:(b + 1) * n] = boltzmann_w(alpha, 0, x[:, None], ka, x[None, :], kb, params, policy)
    if normalized:
        mat /= norm_m(alpha, params)
    return mat


def vertex_vector(grid: SpinGrid, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``rho`` at the grid points times the quadrature weight."""
    x = grid.circle.nodes
    return np.concatenate([self_energy(x, lab, params, policy) for lab in grid.labels]) * grid.circle.weight


def partition_function(n_rows: int, n_cols: int, alpha, params: BaseParams, grid: SpinGrid, *,
                       order: str = "row", max_sites: int = MAX_SITES,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Open-boundary ``Z`` with ``W~_alpha`` on horizontal and ``W~_{eta-alpha}`` on vertical edges.

    Sites are absorbed one by one (``order`` = ``"row"`` or ``"col"``); the
    frontier tensor carries one axis per absorbed site with unabsorbed neighbours.
    """
    if n_rows * n_cols > max_sites:
        raise ResourceLimitError(f"{n_rows}x{n_cols} lattice exceeds the cap of {max_sites} sites")
    w_h = weight_matrix(alpha, grid, params, True, policy)
    w_v = weight_matrix(params.eta - alpha, grid, params, True, policy)
    rho = vertex_vector(grid, params, policy)
    sites = [(i, j) for i in range(n_rows) for j in range(n_cols)]
    if order == "col":
        sites = [(i, j) for j in range(n_cols) for i in range(n_rows)]
    elif order != "row":
        raise ValueError("order must be 'row' or 'col'")
    ident = {s: k for k, s in enumerate(sites)}

    def nbrs(s):
        i, j = s
        out = []
        for di, dj, w in ((0, 1, w_h), (0, -1, w_h), (1, 0, w_v), (-1, 0, w_v)):
            t = (i + di, j + dj)
            if 0 <= t[0] < n_rows and 0 <= t[1] < n_cols:
                out.append((t, w))
        return out

    done = set()
    tensor = np.ones(())
    axes: list = []
    for s in sites:
        ops = [tensor, axes, rho, [ident[s]]]
        for t, w in nbrs(s):
            if t in done:
                # horizontal weights take the left spin first, vertical ones the upper spin
                first, second = (t, s) if t < s else (s, t)
                ops += [w, [ident[first], ident[second]]]
        done.add(s)
        new_axes = [a for a in axes] + [ident[s]]
        new_axes = [a for a in new_axes if any(u not in done for u, _ in nbrs(sites[a]))]
        tensor = np.einsum(*ops, new_axes, optimize=True)
        axes = new_axes
    return complex(tensor)


def free_energy_trend(alpha, params: BaseParams, grid: SpinGrid, shapes=((1, 1), (2, 1), (2, 2), (3, 2))):
    """``log(Z) / sites`` for growing lattices (reported, not asserted)."""
    out = []
    for nr, nc in shapes:
        z = partition_function(nr, nc, alpha, params, grid)
        out.append({"shape": [nr, nc], "Z": z, "log_Z_per_site": cmath.log(z) / (nr * nc)})
    return out


def positivity_report(alpha, params: BaseParams, grid: SpinGrid) -> dict:
    """Largest relative imaginary part and smallest real part of ``W~`` and ``rho`` on the grid."""
    w = weight_matrix(alpha, grid, params)
    rho = vertex_vector(grid, params) / grid.circle.weight
    return {"w_imag": float(np.max(np.abs(w.imag)) / np.max(np.abs(w))), "w_min": float(w.real.min()),
            "rho_imag": float(np.max(np.abs(rho.imag)) / np.max(np.abs(rho))), "rho_min": float(rho.real.min())}
