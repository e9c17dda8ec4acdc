"""q-Pochhammer symbols, theta functions and elliptic gamma functions.

All products are accumulated in log space, one ``log1p(-w)`` per factor, and
truncated once the factor ``w`` drops below ``TruncationPolicy.tol`` in modulus.
Every function accepts numpy arrays for its argument and returns an array of
the same shape (or a Python complex for scalar input).  Bases are scalars.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PoleProximityError, TruncationError

NOME_BOUND = 1.0 - 1e-12
POLE_THRESHOLD = 1e-10
_CHUNK = 1 << 21


@dataclass(frozen=True)
class Nome:
    """A complex base with modulus strictly below one."""

    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not abs(v) < NOME_BOUND:
            raise DomainError(f"nome modulus must be < 1 - 1e-12, got |{v}| = {abs(v)}")
        object.__setattr__(self, "value", v)

    def __complex__(self):
        return self.value

    def __abs__(self):
        return abs(self.value)

    def power(self, k: int) -> "Nome":
        return Nome(self.value ** k)


@dataclass(frozen=True)
class TruncationPolicy:
    tol: float = 1e-16
    max_terms: int = 10 ** 6

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_POLICY = TruncationPolicy()


class Evaluation(NamedTuple):
    value: complex
    error: float


def as_nome(p) -> complex:
    """Validate and unwrap a nome given as ``Nome`` or a plain number."""
    if isinstance(p, Nome):
        return p.value
    return Nome(p).value


def _prep(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _out(values, scalar):
    return complex(values) if scalar else values


def _n_terms(scale: float, base_abs: float, tol: float) -> int:
    """Smallest J with scale * base_abs**J < tol (J >= 1)."""
    if scale < tol:
        return 1
    if base_abs == 0.0:
        return 1
    return max(1, int(math.ceil(math.log(tol / scale) / math.log(base_abs))) + 1)


def _shell_indices(base_abs, scale, tol, max_terms):
    """Multi-indices i with scale * prod(base_abs**i) >= tol (diagonal shelling).

    Returns an integer array of shape (K, len(base_abs)).
    """
    logs = [math.log(b) if b > 0 else -math.inf for b in base_abs]
    budget = math.log(tol / scale) if scale > tol else 0.0
    idx = [()]
    acc = [0.0]
    for lb in logs:
        new_idx, new_acc = [], []
        for prefix, a in zip(idx, acc):
            j = 0
            while True:
                val = a + j * lb if j else a
                if j and not val >= budget:
                    break
                new_idx.append(prefix + (j,))
                new_acc.append(val)
                j += 1
                if lb == -math.inf:
                    break
                if len(new_idx) > max_terms:
                    raise TruncationError(
                        f"more than max_terms={max_terms} factors needed for tol={tol}"
                    )
        idx, acc = new_idx, new_acc
    return np.array(idx, dtype=np.int64).reshape(len(idx), len(base_abs))


@lru_cache(maxsize=4096)
def _monomials(bases: tuple, scale_exp: int, tol: float, max_terms: int) -> np.ndarray:
    """Products of powers of ``bases`` needed at scale ``2**scale_exp`` (cached)."""
    idx = _shell_indices(tuple(abs(b) for b in bases), 2.0 ** scale_exp, tol, max_terms)
    mono = np.ones(len(idx), dtype=complex)
    for col, b in enumerate(bases):
        mono = mono * np.power(complex(b), idx[:, col])
    mono.setflags(write=False)
    return mono


def _tail_bound(base_abs, scale: float, tol: float) -> float:
    """Bound on the sum of dropped ``|w| = scale * prod |b_k|^{i_k} < tol``.

    Each dropped term satisfies ``x <= x^(1 - th) tol^th`` and the full sum of
    ``x^(1 - th)`` is geometric, so the tail is at most
    ``tol^th scale^(1 - th) prod 1 / (1 - |b_k|^(1 - th))``, minimized over a grid of ``th``.
    """
    if scale <= 0:
        return 0.0
    best = math.inf
    for th in np.linspace(0.5, 0.995, 100):
        e = 1.0 - th
        val = tol ** th * scale ** e
        for b in base_abs:
            val /= 1.0 - b ** e
        best = min(best, val)
    return float(best)


def _relative_error(tail: float, n_factors: int, families: int = 2) -> float:
    """Relative error of ``exp(sum log(1 - w))`` from the truncated tail and rounding.

    ``|log(1 - w)| <= |w| / (1 - |w|)`` and every dropped ``|w| < tol << 1``.
    """
    return math.expm1(families * tail / (1.0 - min(tail, 0.5))) + n_factors * 2.2e-16


def _scale_exp(scale: float) -> int:
    return int(math.ceil(math.log2(scale))) if scale > 0 else -1074


def _sum_log1p_checked(mono, z, what):
    """Sum of log(1 - z*mono) per z, raising near a vanishing factor."""
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, _CHUNK // max(1, mono.size))
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, flat.size, step):
            w = flat[s:s + step, None] * mono[None, :]
            d = np.abs(1.0 - w)
            if d.size and d.min() < POLE_THRESHOLD:
                i, k = np.unravel_index(np.argmin(d), d.shape)
                raise PoleProximityError(
                    f"{what}: argument {flat[s + i]!r} within {d[i, k]:.3g} of a pole (factor #{k})",
                    index=int(k),
                    distance=float(d[i, k]),
                )
            out[s:s + step] = np.log1p(-w).sum(axis=1)
    return out.reshape(z.shape)


def _sum_log1p(w_fac, mono, z):
    """Sum over factors of log(1 - z*mono) for each z, chunked over z."""
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, _CHUNK // max(1, mono.size))
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(0, flat.size, step):
            w = flat[s:s + step, None] * (w_fac * mono)[None, :]
            out[s:s + step] = np.log1p(-w).sum(axis=1)
    return out.reshape(z.shape)


def q_pochhammer(z, p, policy: TruncationPolicy = DEFAULT_POLICY, *, with_error=False):
    """Infinite q-Pochhammer symbol ``(z; p)_inf = prod_{j>=0} (1 - z p^j)``."""
    p = as_nome(p)
    z, scalar = _prep(z)
    scale = float(np.max(np.abs(z))) if z.size else 0.0
    n = _n_terms(scale, abs(p), policy.tol)
    if n > policy.max_terms:
        partial = _sum_log1p(1.0, p ** np.arange(policy.max_terms), z)
        raise TruncationError("q_pochhammer: max_terms exceeded", partial=np.exp(partial))
    mono = p ** np.arange(n)
    val = np.exp(_sum_log1p(1.0, mono, z))
    val = np.where(z == 0, 1.0 + 0j, val)
    val = _out(val, scalar)
    if with_error:
        tail = scale * abs(p) ** n / (1.0 - abs(p))
        return Evaluation(val, float(np.max(np.abs(val)) * _relative_error(tail, n, 1)))
    return val


def theta(z, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Theta function ``theta(z; p) = (z; p)_inf (p/z; p)_inf``."""
    p = as_nome(p)
    z, scalar = _prep(z)
    if np.any(z == 0):
        raise DomainError("theta(z; p) is undefined at z = 0")
    val = q_pochhammer(z, p, policy) * q_pochhammer(p / z, p, policy)
    return _out(val, scalar)


def theta_series(z, p, policy: TruncationPolicy = DEFAULT_POLICY):
    """Laurent-series form of ``theta(z; p)``, independent of the product form."""
    p = as_nome(p)
    z, scalar = _prep(z)
    if np.any(z == 0):
        raise DomainError("theta(z; p) is undefined at z = 0")
    lp = math.log(abs(p))
    lz = np.log(np.abs(z))
    kmax = int(math.ceil(2 * (abs(float(np.max(np.abs(lz)))) + 40) / -lp)) + 4
    k = np.arange(-kmax, kmax + 1)
    expo = k * (k - 1) // 2
    coef = np.where(k % 2 == 0, 1.0, -1.0) * np.power(complex(p), expo.astype(float))
    total = np.zeros(z.shape, dtype=complex)
    for c, kk in zip(coef, k):
        total = total + c * z ** int(kk)
    val = total / q_pochhammer(p, p, policy)
    return _out(val, scalar)


def theta1(u, tau, policy: TruncationPolicy = DEFAULT_POLICY):
    """Odd Jacobi theta function theta_1(u | tau) from its defining series."""
    tau = complex(tau)
    if not tau.imag > 0:
        raise DomainError("theta1 requires Im(tau) > 0")
    u, scalar = _prep(u)
    yu = float(np.max(np.abs(u.imag))) if u.size else 0.0
    kmax = int(math.ceil(math.sqrt(-math.log(policy.tol) / (math.pi * tau.imag)) + yu / tau.imag)) + 3
    total = np.zeros(u.shape, dtype=complex)
    for k in range(-kmax, kmax + 1):
        h = k + 0.5
        total = total + np.exp(1j * math.pi * tau * h * h + 2j * math.pi * h * (u + 0.5))
    return _out(-total, scalar)


def ell_gamma(z, p, q, policy: TruncationPolicy = DEFAULT_POLICY, *, with_error=False):
    """Elliptic gamma function ``Gamma(z; p, q)``.

    Raises PoleProximityError when some denominator factor ``1 - z p^j q^k``
    falls below the relative threshold 1e-10.
    """
    p, q = as_nome(p), as_nome(q)
    z, scalar = _prep(z)
    if np.any(z == 0):
        raise DomainError("elliptic gamma is undefined at z = 0")
    az = np.abs(z)
    scale = max(float(az.max()), float((abs(p * q) / az).max())) if z.size else 1.0
    mono = _monomials((p, q), _scale_exp(scale), policy.tol, policy.max_terms)
    logs = _sum_log1p(1.0, mono, 1.0 / z * (p * q)) - _sum_log1p_checked(mono, z, "ell_gamma")
    val = _out(np.exp(logs), scalar)
    if with_error:
        tail = _tail_bound((abs(p), abs(q)), 2.0 ** _scale_exp(scale), policy.tol)
        return Evaluation(val, float(np.max(np.abs(val)) * _relative_error(tail, 2 * len(mono))))
    return val


def ell_gamma2(z, p, q, t, policy: TruncationPolicy = DEFAULT_POLICY, *, with_error=False):
    """Second-order elliptic gamma function ``Gamma(z; p, q, t)`` (entire in z)."""
    p, q, t = as_nome(p), as_nome(q), as_nome(t)
    z, scalar = _prep(z)
    if np.any(z == 0):
        raise DomainError("second-order elliptic gamma is undefined at z = 0")
    az = np.abs(z)
    pqt = p * q * t
    scale = max(float(az.max()), float((abs(pqt) / az).max())) if z.size else 1.0
    mono = _monomials((p, q, t), _scale_exp(scale), policy.tol, policy.max_terms)
    logs = _sum_log1p(1.0, mono, z) + _sum_log1p(1.0, mono, pqt / z)
    val = _out(np.exp(logs), scalar)
    if with_error:
        tail = _tail_bound((abs(p), abs(q), abs(t)), 2.0 ** _scale_exp(scale), policy.tol)
        return Evaluation(val, float(np.max(np.abs(val)) * _relative_error(tail, 2 * len(mono))))
    return val
