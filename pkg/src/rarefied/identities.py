"""Pointwise identity sweeps for the theta/gamma base layer and the rarefied gamma network.

Each sweep returns ``{identity name: worst relative error}`` over fixed-seed points.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .core import ell_gamma, ell_gamma2, q_pochhammer, theta, theta1, theta_series
from .gamma import (BaseParams, gamma_periodic, gamma_r, gamma_r_norm, gamma_r_product, residue_limit,
                    residue_probe)

TWO_PI_I = 2j * math.pi


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def _annulus(rng, n, lo, hi):
    """Points with modulus in ``[lo, hi]`` and uniform phase."""
    rad = rng.uniform(lo, hi, n)
    return rad * np.exp(TWO_PI_I * rng.uniform(0, 1, n))


def _nome(rng, lo=0.05, hi=0.4):
    return complex(_annulus(rng, 1, lo, hi)[0])


def base_layer(seed: int = 0x5EED, n_points: int = 200) -> dict[str, float]:
    """Theta product/series, theta symmetries, theta_1 product relation, Gamma and Gamma_2 relations."""
    rng = np.random.default_rng(seed)
    out = {}
    p = _nome(rng)
    q = _nome(rng)
    t = _nome(rng)
    z = _annulus(rng, n_points, 0.5, 2.0)
    out["theta-series"] = _rel(theta(z, p), theta_series(z, p))
    out["theta-inversion"] = _rel(theta(1 / z, p), -theta(z, p) / z)
    out["theta-shift"] = _rel(theta(p * z, p), theta(1 / z, p))
    tau = complex(0.1, rng.uniform(0.3, 0.6))
    nome = cmath.exp(TWO_PI_I * tau)
    u = rng.uniform(-0.5, 0.5, n_points) + 1j * rng.uniform(-0.1, 0.1, n_points)
    rhs = (1j * cmath.exp(TWO_PI_I * tau / 8) * np.exp(-1j * math.pi * u)
           * q_pochhammer(nome, nome) * theta(np.exp(TWO_PI_I * u), nome))
    out["theta1-product"] = _rel(theta1(u, tau), rhs)
    zg = _annulus(rng, n_points, 0.5, 1.5)
    g = ell_gamma(zg, p, q)
    out["gamma-reflection"] = _rel(ell_gamma(p * q / zg, p, q) * g, np.ones_like(zg))
    out["gamma-symmetry"] = _rel(ell_gamma(zg, q, p), g)
    out["gamma-q-shift"] = _rel(ell_gamma(q * zg, p, q), theta(zg, p) * g)
    out["gamma-p-shift"] = _rel(ell_gamma(p * zg, p, q), theta(zg, q) * g)
    g2 = ell_gamma2(zg, p, q, t)
    out["gamma2-q-shift"] = _rel(ell_gamma2(q * zg, p, q, t), ell_gamma(zg, p, t) * g2)
    out["gamma2-reflection"] = _rel(ell_gamma2(p * q * t * zg, p, q, t), ell_gamma2(1 / zg, p, q, t))
    out["gamma2-symmetry"] = _rel(ell_gamma2(zg, t, p, q), g2)
    return out


def _recurrence_exponents(u, m: float, params: BaseParams):
    r, tau, sigma = params.r, params.tau, params.sigma
    c = 1j * math.pi / (2 * r)
    e1 = c * ((2 * u - 1) * (2 * m + 1 - r) + (sigma - tau + 1) * (1 - r * r) / 3 + 2 * (tau - 1) * m * (m - r))
    e2 = c * ((2 * u + 1) * (-2 * m + 1 + r) - (sigma - tau + 1) * (1 - r * r) / 3 + 2 * (sigma + 1) * m * (m - r))
    return e1, e2


def gamma_network(r: int, seed: int = 0x5EED, n_points: int = 40) -> dict[str, float]:
    """The rarefied gamma identities at rank ``r`` over integer and half-integer ``m``.

    Relations that move ``m`` by ``r`` (quasiperiodicity, periodicity and every relation
    pairing ``m`` with ``-m``) only hold for integer ``m`` and are swept there.  The
    tau-recurrence is checked with ``theta(q^m / z; q^r)``; the form with
    ``theta(z q^{-m}; q^r)`` is off by the factor ``-q^m / z``.
    """
    rng = np.random.default_rng(seed + r)
    params = BaseParams.from_nomes(r, _nome(rng, 0.1, 0.3), _nome(rng, 0.1, 0.3))
    p, q = params.p, params.q
    swapped = params.swapped()
    u = rng.uniform(-0.5, 0.5, n_points) + 1j * rng.uniform(-0.05, 0.05, n_points) + 0.02j
    z = np.exp(TWO_PI_I * u)
    out = {k: 0.0 for k in ("product-form", "quasiperiodicity", "permutation", "inversion", "norm-inversion",
                            "norm-symmetry", "periodicity", "modified-symmetry", "periodic-inversion",
                            "recurrence-sigma", "recurrence-tau", "cross-normalization", "r1-collapse")}

    def bump(key, val):
        out[key] = max(out[key], val)

    for two_m in range(-4, 2 * r + 5):
        m = two_m / 2
        integer = two_m % 2 == 0
        g = gamma_r(z, two_m, params)
        if integer and 0 <= two_m // 2 <= r:
            bump("product-form", _rel(gamma_r_product(z, two_m, params), g))
        if integer:
            mi = two_m // 2
            pref = (-z) ** (-mi) * q ** (mi * (mi + 1) / 2) * p ** (-mi * (mi - 1) / 2)
            bump("quasiperiodicity", _rel(gamma_r(z, two_m + 2 * r, params), pref * g))
            bump("periodicity", _rel(gamma_periodic(u, two_m + 2 * r, params), gamma_periodic(u, two_m, params)))
        bump("permutation", _rel(gamma_r(z, 2 * r - two_m, swapped), g))
        bump("inversion", _rel(gamma_r(params.pq / z, 2 * r - two_m, params) * g, np.ones_like(z)))
        gn = gamma_r_norm(z, two_m, params)
        gp = gamma_periodic(u, two_m, params)
        if integer:
            bump("norm-inversion", _rel(gamma_r_norm(params.pq / z, -two_m, params) * gn, np.ones_like(z)))
            bump("norm-symmetry", _rel(gamma_r_norm(z, -two_m, swapped), gn))
            phase = cmath.exp(1j * math.pi * m * (m - r) * (2 * m - r) / (3 * r))
            bump("modified-symmetry", _rel(gamma_periodic(u, -two_m, swapped), phase * gp))
            back = gamma_periodic(params.tau + params.sigma - u, -two_m, params)
            bump("periodic-inversion", _rel(gp * back, np.ones_like(z)))
        e1, e2 = _recurrence_exponents(u, m, params)
        rhs1 = np.exp(e1) * theta(z * params.p_pow(m), params.pr)
        bump("recurrence-sigma", _rel(gamma_periodic(u + params.sigma, two_m + 2, params) / gp, rhs1))
        rhs2 = np.exp(e2) * theta(params.q_pow(m) / z, params.qr)
        bump("recurrence-tau", _rel(gamma_periodic(u + params.tau, two_m - 2, params) / gp, rhs2))
        # both normalizations are explicit exponentials times gamma_r
        ez = m * (m - 1) / 2
        log_norm = ez * np.log(-z) + TWO_PI_I * (params.tau * m * (m - 1) * (m - 2) / 6
                                                 - params.sigma * m * (m - 1) * (m + 1) / 6)
        log_per = 1j * math.pi * m * (m - r) / (2 * r) * (2 * u - params.tau - params.sigma
                                                          + (2 * m - r) / 3 * (params.tau - params.sigma - 1))
        bump("cross-normalization", _rel(gp / gn, np.exp(log_per - log_norm)))
    one = BaseParams(1, params.tau, params.sigma)
    plain = ell_gamma(z, p, q)
    for two_m in (-2, 0, 2, 4):
        bump("r1-collapse", _rel(gamma_r_norm(z, two_m, one), plain))
    # |1 - z| = 1e-4 along the diagonal direction
    u0 = 1e-4 / (2 * math.pi) * cmath.exp(0.25j * math.pi)
    out["residue-limit"] = abs(residue_probe(params, u0) / residue_limit(params) - 1)
    return out
