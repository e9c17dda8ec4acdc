"""Rarefied elliptic gamma functions in the plain, normalized and r-periodic forms.

Discrete indices are passed as doubled integers ``two_m`` so that half-integer
values are exact.  Powers ``p**x`` with rational ``x`` are always evaluated as
``exp(2 pi i tau x)`` from the additive half-period, which fixes every branch.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import DEFAULT_POLICY, TruncationPolicy, ell_gamma, q_pochhammer, theta
from .errors import DomainError

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class BaseParams:
    """Rank ``r`` and half-periods ``tau``, ``sigma`` (``p = e^{2 pi i tau}``, ``q = e^{2 pi i sigma}``)."""

    r: int
    tau: complex
    sigma: complex

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise DomainError(f"rank r must be a positive integer, got {self.r}")
        tau, sigma = complex(self.tau), complex(self.sigma)
        if not (tau.imag > 0 and sigma.imag > 0):
            raise DomainError("tau and sigma need positive imaginary parts")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "sigma", sigma)
        if not (abs(self.p) < 1 and abs(self.q) < 1):
            raise DomainError("|p| and |q| must be < 1")

    @classmethod
    def from_nomes(cls, r: int, p: complex, q: complex) -> "BaseParams":
        """Principal-branch half-periods for given nomes."""
        p, q = complex(p), complex(q)
        if not (0 < abs(p) < 1 and 0 < abs(q) < 1):
            raise DomainError("nomes must satisfy 0 < |p|, |q| < 1")
        return cls(r, cmath.log(p) / TWO_PI_I, cmath.log(q) / TWO_PI_I)

    @property
    def p(self) -> complex:
        return cmath.exp(TWO_PI_I * self.tau)

    @property
    def q(self) -> complex:
        return cmath.exp(TWO_PI_I * self.sigma)

    @property
    def pq(self) -> complex:
        return cmath.exp(TWO_PI_I * (self.tau + self.sigma))

    @property
    def pr(self) -> complex:
        return cmath.exp(TWO_PI_I * self.r * self.tau)

    @property
    def qr(self) -> complex:
        return cmath.exp(TWO_PI_I * self.r * self.sigma)

    @property
    def eta(self) -> float | complex:
        """``pq = e^{-4 pi eta}``, i.e. ``eta = -i (tau + sigma) / 2``."""
        return -0.5j * (self.tau + self.sigma)

    def p_pow(self, x) -> complex:
        return cmath.exp(TWO_PI_I * self.tau * float(x))

    def q_pow(self, x) -> complex:
        return cmath.exp(TWO_PI_I * self.sigma * float(x))

    def swapped(self) -> "BaseParams":
        return BaseParams(self.r, self.sigma, self.tau)

    def kappa(self, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
        """``kappa = (p^r; p^r)(q^r; q^r) / 2``."""
        pr, qr = self.pr, self.qr
        return 0.5 * q_pochhammer(pr, pr, policy) * q_pochhammer(qr, qr, policy)

    @property
    def physical(self) -> bool:
        """True when ``q`` is the complex conjugate of ``p`` (within 1e-12)."""
        return abs(self.q - self.p.conjugate()) < 1e-12


@dataclass(frozen=True)
class RGPoint:
    """Additive argument ``u`` and doubled discrete index ``two_m`` (m = two_m / 2)."""

    u: complex
    two_m: int

    @property
    def z(self) -> complex:
        return cmath.exp(TWO_PI_I * self.u)

    @property
    def m(self) -> Fraction:
        return Fraction(self.two_m, 2)

    @property
    def parity(self) -> int:
        """``(-1)^{2 mu}`` for ``m`` in ``Z + mu``."""
        return -1 if self.two_m % 2 else 1

    def label(self, r: int) -> int:
        """Doubled representative of ``m`` modulo ``r`` (in ``[0, 2r)``)."""
        return self.two_m % (2 * r)


def _m(two_m) -> Fraction:
    return Fraction(int(two_m), 2)


def gamma_r(z, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """``gamma^(r)(z, m; p, q) = Gamma(z p^m; p^r, pq) Gamma(z q^{r-m}; q^r, pq)``."""
    m = _m(two_m)
    r = params.r
    z = np.asarray(z, dtype=complex) if not np.isscalar(z) else complex(z)
    pq = params.pq
    a = ell_gamma(z * params.p_pow(m), params.pr, pq, policy)
    b = ell_gamma(z * params.q_pow(r - m), params.qr, pq, policy)
    return a * b


def gamma_r_product(z, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """Rarefied product form, valid for integer ``0 <= m <= r``."""
    if two_m % 2 or not 0 <= two_m // 2 <= params.r:
        raise DomainError("the rarefied product form needs an integer 0 <= m <= r")
    m, r = two_m // 2, params.r
    pr, qr, pq = params.pr, params.qr, params.pq
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape, dtype=complex)
    for k in range(m):
        out = out * ell_gamma(params.q_pow(r - m) * z * pq ** k, pr, qr, policy)
    for k in range(r - m):
        out = out * ell_gamma(params.p_pow(m) * z * pq ** k, pr, qr, policy)
    return complex(out) if out.ndim == 0 else out


def _power_of_minus(z, expo: Fraction):
    """``(-z)**expo`` with integer powers exact and the principal log otherwise."""
    w = -np.asarray(z, dtype=complex)
    if expo.denominator == 1:
        return w ** int(expo)
    return np.exp(float(expo) * np.log(w))


def norm_exponents(two_m: int):
    """Exact exponents of ``(-z)``, ``p`` and ``q`` in the quasiperiodic normalization."""
    m = _m(two_m)
    return m * (m - 1) / 2, m * (m - 1) * (m - 2) / 6, -m * (m - 1) * (m + 1) / 6


def gamma_r_norm(z, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """Normalized ``Gamma^(r)(z, m; p, q)``; equals ``Gamma(z; p, q)`` for ``r = 1``.

    Non-integer powers of ``-z`` use the principal logarithm (cut where ``-z``
    is negative real).  For integer ``m`` every exponent is an integer.
    """
    ez, ep, eq = norm_exponents(two_m)
    pref = _power_of_minus(z, ez) * params.p_pow(ep) * params.q_pow(eq)
    val = pref * gamma_r(z, two_m, params, policy)
    return complex(val) if np.ndim(val) == 0 else val


def periodic_exponent(u, two_m: int, params: BaseParams):
    """Exponent ``E`` with ``Gamma(u, m) = exp(E) gamma^(r)(e^{2 pi i u}, m)``."""
    m, r = _m(two_m), params.r
    c1 = m * (m - r) / (2 * r)
    c2 = (2 * m - r) / 3
    tau, sigma = params.tau, params.sigma
    return 1j * math.pi * float(c1) * (2 * np.asarray(u, dtype=complex) - tau - sigma
                                      + float(c2) * (tau - sigma - 1))


def gamma_periodic(u, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """r-periodic normalized rarefied gamma ``Gamma(u, m; tau, sigma)``."""
    u = np.asarray(u, dtype=complex)
    val = np.exp(periodic_exponent(u, two_m, params)) * gamma_r(np.exp(TWO_PI_I * u), two_m, params, policy)
    return complex(val) if np.ndim(val) == 0 else val


def inv_gamma_pm2(u, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """``1 / (Gamma(2u, 2m) Gamma(-2u, -2m))`` in the periodic normalization.

    ``two_m`` is the doubled label, so the discrete argument is ``N = 2m = two_m``.
    With ``Z = e^{4 pi i u}`` and ``x = Z p^N`` the plain-gamma quotient is

        (-1)^(N+1) x^-(N+1) (pq)^(N(N+1)/2) theta(x; p^r) theta(Z q^-N; q^r),

    which stays finite at ``u = 0, 1/2`` where the gamma functions have poles.
    """
    u = np.asarray(u, dtype=complex)
    n = int(two_m)
    big_z = np.exp(2 * TWO_PI_I * u)
    x = big_z * params.p_pow(n)
    sign = -1.0 if n % 2 == 0 else 1.0
    plain = (sign * x ** (-(n + 1)) * params.pq ** (n * (n + 1) / 2)
             * theta(x, params.pr, policy) * theta(big_z * params.q_pow(-n), params.qr, policy))
    expo = periodic_exponent(2 * u, 2 * n, params) + periodic_exponent(-2 * u, -2 * n, params)
    val = np.exp(-expo) * plain
    return complex(val) if np.ndim(val) == 0 else val


def inv_gamma_pm2_display(u, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """Compact theta form ``(pq)^{m(2m-r)/2r} theta(e^{4 pi i u} p^{2m}; p^r) theta(e^{-4 pi i u} q^{2m}; q^r)``.

    Agrees with :func:`inv_gamma_pm2` only for labels ``m = 0`` and ``m = r/2``;
    for other labels the two differ by a u-independent constant.
    """
    u = np.asarray(u, dtype=complex)
    m, r = _m(two_m), params.r
    x = np.exp(2 * TWO_PI_I * u)
    pref = cmath.exp(TWO_PI_I * (params.tau + params.sigma) * float(m * (2 * m - r) / (2 * r)))
    val = pref * theta(x * params.p_pow(2 * m), params.pr, policy) * theta(1 / x * params.q_pow(2 * m), params.qr, policy)
    return complex(val) if np.ndim(val) == 0 else val


def inv_gamma_r_norm_pm2(z, two_m: int, params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY):
    """``1 / (Gamma^(r)(z^2, 2m) Gamma^(r)(z^{-2}, -2m))`` for integer ``2m``.

    Uses the periodic theta form and the explicit ratio of the two
    normalizations.  ``z`` must be given; ``u`` is taken on the principal branch.
    """
    z = np.asarray(z, dtype=complex)
    u = np.log(z) / TWO_PI_I
    n2 = 2 * int(two_m)  # doubled value of the discrete argument 2m
    base = inv_gamma_pm2(u, two_m, params, policy)
    ratio = (_norm_over_periodic(z ** 2, 2 * u, n2, params)
             * _norm_over_periodic(z ** -2, -2 * u, -n2, params))
    val = base / ratio
    return complex(val) if np.ndim(val) == 0 else val


def _norm_over_periodic(z, u, two_n, params):
    """``Gamma^(r)(z, n) / Gamma(u, n)`` for ``z = e^{2 pi i u}``; pure prefactors."""
    ez, ep, eq = norm_exponents(two_n)
    num = _power_of_minus(z, ez) * params.p_pow(ep) * params.q_pow(eq)
    return num * np.exp(-periodic_exponent(u, two_n, params))


def residue_limit(params: BaseParams, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """``lim_{z->1} (1 - z) gamma^(r)(z, 0) = 1 / ((p^r; p^r)(q^r; q^r))``."""
    pr, qr = params.pr, params.qr
    return 1.0 / (q_pochhammer(pr, pr, policy) * q_pochhammer(qr, qr, policy))


def residue_probe(params: BaseParams, u=1e-4 * (1 + 1j), policy: TruncationPolicy = DEFAULT_POLICY):
    """``(1 - e^{2 pi i u}) Gamma(u, 0)`` near ``u = 0``; approaches ``residue_limit``."""
    z = cmath.exp(TWO_PI_I * u)
    return (1 - z) * gamma_periodic(u, 0, params, policy)


def pole_exponents(two_n: int, r: int, depth: int = 14) -> np.ndarray:
    """Exponent pairs ``(a, b)`` with poles of ``gamma^(r)(x, n)`` at ``x = p^a q^b``.

    For integer ``n`` the divisor only depends on ``n mod r``, which removes
    poles cancelled by zeros of the unreduced product.
    """
    n = Fraction(int(two_n), 2)
    if n.denominator == 1:
        n = n % r
    n = float(n)
    j, k = np.meshgrid(np.arange(depth), np.arange(depth), indexing="ij")
    j, k = j.ravel().astype(float), k.ravel().astype(float)
    first = np.stack([-n - r * j - k, -k], axis=1)
    second = np.stack([-k, -(r - n) - r * j - k], axis=1)
    return np.concatenate([first, second])


def gamma_poles(two_n: int, params: BaseParams, limit: int = 200, depth: int = 14) -> np.ndarray:
    """Poles in ``x`` of ``gamma^(r)(x, n)``, the ``limit`` ones closest to ``|x| = 1``."""
    ab = pole_exponents(two_n, params.r, depth)
    poles = np.exp(TWO_PI_I * (params.tau * ab[:, 0] + params.sigma * ab[:, 1]))
    order = np.argsort(np.abs(np.log(np.abs(poles))), kind="stable")
    return poles[order[:limit]]


def factor_poles(c, eps: int, two_n: int, params: BaseParams, limit: int = 200) -> np.ndarray:
    """z-poles of ``u -> Gamma(c + eps u, n)`` with ``z = e^{2 pi i u}`` and ``eps = +-1``."""
    x = gamma_poles(two_n, params, limit)
    return (x * cmath.exp(-TWO_PI_I * complex(c))) ** int(eps)


def factor_poles_additive(c, eps: int, two_n: int, params: BaseParams, depth: int = 6) -> np.ndarray:
    """Additive poles ``u`` (mod 1) of ``u -> Gamma(c + eps u, n)``."""
    ab = pole_exponents(two_n, params.r, depth)
    w = params.tau * ab[:, 0] + params.sigma * ab[:, 1]
    return eps * (w - complex(c))
