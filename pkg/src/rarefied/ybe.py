"""Operator algebra on three-spin grid functions: the S-operators, Coxeter relations,
factorized R-matrices and the Yang-Baxter equation.

States are arrays of shape ``(batch, d1, d2, d3)`` together with one
:class:`SpinGrid` per spin.  Operators act factor-wise, so the full
``d^3 x d^3`` matrix is never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bailey import d_coeff, fourier_test_function, m_inversion_check, m_operator, minv_guard
from .core import DEFAULT_POLICY, TruncationPolicy
from .errors import DomainError, ParityError, ResourceLimitError
from .gamma import BaseParams, gamma_periodic, inv_gamma_pm2
from .quadrature import CircleGrid, SpinGrid
from .residual import Residual

DEFAULT_SEED = 0x5EED
MAX_FACTOR_DIM = 64
MARGIN = 1e-2


@dataclass(frozen=True)
class ParamTuple:
    """Six pairs ``a_j = (t_j, n_j)``; ``two_n`` holds ``2 n_j``."""

    t: tuple
    two_n: tuple

    def __post_init__(self):
        t = tuple(complex(x) for x in self.t)
        n = tuple(int(x) for x in self.two_n)
        if len(t) != 6 or len(n) != 6:
            raise ValueError("a parameter tuple has six entries")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "two_n", n)

    def diff(self, j: int, k: int):
        """``a_j - a_k`` with 1-based indices."""
        return self.t[j - 1] - self.t[k - 1], self.two_n[j - 1] - self.two_n[k - 1]

    def transposed(self, k: int) -> "ParamTuple":
        """``s_k a``: swap entries ``k`` and ``k + 1``."""
        t, n = list(self.t), list(self.two_n)
        t[k - 1], t[k] = t[k], t[k - 1]
        n[k - 1], n[k] = n[k], n[k - 1]
        return ParamTuple(tuple(t), tuple(n))

    def spin_parities(self, c: int = 0) -> tuple[int, int, int]:
        """Label parities consistent with every S-operator: ``mu_1 = nu_1 + c``,
        ``mu_2 = nu_1 + nu_2 + nu_3 + c``, ``mu_3 = nu_1 + ... + nu_5 + c``."""
        nu = [x % 2 for x in self.two_n]
        return ((nu[0] + c) % 2, (sum(nu[:3]) + c) % 2, (sum(nu[:5]) + c) % 2)

    def shifted(self, dt: complex, two_dn: int = 0) -> "ParamTuple":
        return ParamTuple(tuple(x + dt for x in self.t), tuple(x + two_dn for x in self.two_n))


@dataclass(frozen=True)
class SpectralParams:
    """Spectral pairs ``u, v, w`` and representation pairs ``g_1, g_2, g_3``, each ``(complex, doubled int)``."""

    u: tuple
    v: tuple
    w: tuple
    g1: tuple
    g2: tuple
    g3: tuple


def _half(x, y, sign):
    two = x[1] + sign * y[1]
    if two % 2:
        raise ParityError("discrete parts do not halve to a doubled integer")
    return (x[0] + sign * y[0]) / 2, two // 2


def spectral_map(sp: SpectralParams) -> ParamTuple:
    """``a_1 = (u + g_1)/2``, ``a_2 = (u - g_1)/2``, ..., ``a_6 = (w - g_3)/2``."""
    pairs = []
    for x, g in ((sp.u, sp.g1), (sp.v, sp.g2), (sp.w, sp.g3)):
        pairs += [_half(x, g, 1), _half(x, g, -1)]
    return ParamTuple(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))


def spectral_from_params(pt: ParamTuple) -> SpectralParams:
    """Inverse of :func:`spectral_map`: ``u = a_1 + a_2``, ``g_1 = a_1 - a_2`` and so on."""
    out = []
    for j in (0, 2, 4):
        out.append((pt.t[j] + pt.t[j + 1], pt.two_n[j] + pt.two_n[j + 1]))
        out.append((pt.t[j] - pt.t[j + 1], pt.two_n[j] - pt.two_n[j + 1]))
    u, g1, v, g2, w, g3 = out
    return SpectralParams(u, v, w, g1, g2, g3)


def kernel_margin(pt: ParamTuple, params: BaseParams) -> float:
    """Distance of the nearest kernel pole to the real contour over all ordered pairs ``i < j``.

    ``M(a_i - a_j)`` needs ``Im(t_i - t_j) > 0``; ``D(a_i - a_j)`` needs
    ``Im(t_i - t_j) < Im((tau + sigma) / 2)``.
    """
    h = (0.5 * (params.tau + params.sigma)).imag
    out = math.inf
    for i in range(6):
        for j in range(i + 1, 6):
            d = (pt.t[i] - pt.t[j]).imag
            out = min(out, d, h - d)
    return out


def sample_param_tuple(params: BaseParams, seed: int = DEFAULT_SEED, two_n=None, step: float | None = None,
                       margin: float = MARGIN, jitter: float = 0.02) -> ParamTuple:
    """Imaginary parts decreasing in equal steps, random real parts, rejection on :func:`kernel_margin`."""
    rng = np.random.default_rng(seed)
    h = (0.5 * (params.tau + params.sigma)).imag
    step = step if step is not None else h / 6
    two_n = tuple(two_n) if two_n is not None else (0,) * 6
    for _ in range(1000):
        im = -step * np.arange(6) + rng.uniform(-jitter, jitter, 6) * step
        re = rng.uniform(-0.25, 0.25, 6)
        pt = ParamTuple(tuple(complex(a, b) for a, b in zip(re, im)), two_n)
        if kernel_margin(pt, params) > margin:
            return pt
    raise DomainError("no parameter tuple with the requested kernel margin")


@dataclass(frozen=True)
class FactorOp:
    """One factor-wise operator: an M-matrix on one spin or a D-multiplier on two adjacent spins."""

    kind: str
    factors: tuple
    data: np.ndarray
    domain: tuple
    codomain: tuple
    label: str = ""

    def apply(self, state: np.ndarray) -> np.ndarray:
        if self.kind == "M":
            (k,) = self.factors
            out = np.tensordot(self.data, state, axes=([1], [k + 1]))
            return np.moveaxis(out, 0, k + 1)
        if self.kind == "D":
            i, j = self.factors
            shape = [1, 1, 1, 1]
            shape[i + 1] = self.data.shape[0]
            shape[j + 1] = self.data.shape[1]
            return state * self.data.reshape(shape)
        if self.kind == "P":
            i, j = self.factors
            return np.swapaxes(state, i + 1, j + 1)
        raise ValueError(f"unknown operator kind {self.kind!r}")


def _check_dim(grid: SpinGrid, cap: int):
    if grid.size > cap:
        raise ResourceLimitError(f"factor dimension {grid.size} exceeds the cap {cap}")


def m_factor(s, two_n, spin: int, grids: tuple, params: BaseParams, *, cap: int = MAX_FACTOR_DIM,
             policy: TruncationPolicy = DEFAULT_POLICY, label: str = "") -> FactorOp:
    """``M(s, n)`` acting on spin ``spin`` (0-based); the output parity follows ``p(n) = p(m) p(k)``."""
    g_in = grids[spin]
    _check_dim(g_in, cap)
    g_out = SpinGrid(g_in.circle, g_in.r, (two_n + g_in.two_mu) % 2)
    mat = m_operator(s, two_n, g_out, g_in, params, policy).matrix
    out = list(grids)
    out[spin] = g_out
    return FactorOp("M", (spin,), mat, tuple(grids), tuple(out), label)


def d_factor(s, two_n, spins: tuple, grids: tuple, params: BaseParams, *,
             policy: TruncationPolicy = DEFAULT_POLICY, label: str = "") -> FactorOp:
    """Multiplication by ``D(s, n; sigma_i, sigma_j)``."""
    i, j = spins
    gi, gj = grids[i], grids[j]
    if (two_n - gi.two_mu - gj.two_mu) % 2:
        raise ParityError("D needs p(n) = p(m_i) p(m_j)")
    ui, mi = gi.flat_points()
    uj, mj = gj.flat_points()
    vals = np.empty((gi.size, gj.size), dtype=complex)
    ni, nj = gi.n_nodes, gj.n_nodes
    for a, la in enumerate(gi.labels):
        for b, lb in enumerate(gj.labels):
            vals[a * ni:(a + 1) * ni, b * nj:(b + 1) * nj] = d_coeff(
                s, two_n, gi.circle.nodes[:, None], la, gj.circle.nodes[None, :], lb, params, policy)
    return FactorOp("D", (i, j), vals, tuple(grids), tuple(grids), label)


def perm_op(i: int, j: int, grids: tuple) -> FactorOp:
    """``P_ij`` as an exact axis swap (1-based spin indices)."""
    out = list(grids)
    out[i - 1], out[j - 1] = out[j - 1], out[i - 1]
    return FactorOp("P", (i - 1, j - 1), np.empty(0), tuple(grids), tuple(out), f"P{i}{j}")


def s_op(index: int, pt: ParamTuple, grids: tuple, params: BaseParams, **kw) -> FactorOp:
    """``S_1, S_3, S_5`` are ``M(a_1 - a_2)``, ``M(a_3 - a_4)``, ``M(a_5 - a_6)`` on spins 1, 2, 3;
    ``S_2, S_4`` multiply by ``D(a_2 - a_3; sigma_1, sigma_2)`` and ``D(a_4 - a_5; sigma_2, sigma_3)``."""
    if index not in (1, 2, 3, 4, 5):
        raise ValueError("S-operators are indexed 1..5")
    s, two_n = pt.diff(index, index + 1)
    lab = f"S{index}"
    if index % 2:
        return m_factor(s, two_n, index // 2, grids, params, label=lab, **kw)
    spins = (0, 1) if index == 2 else (1, 2)
    return d_factor(s, two_n, spins, grids, params, label=lab, policy=kw.get("policy", DEFAULT_POLICY))


@dataclass
class Word:
    """Factor-wise operators in application order (first entry acts first)."""

    ops: list = field(default_factory=list)
    domain: tuple | None = None
    codomain: tuple | None = None

    def apply(self, state: np.ndarray) -> np.ndarray:
        for op in self.ops:
            state = op.apply(state)
        return state

    def then(self, other: "Word") -> "Word":
        """``other`` applied after ``self``."""
        return Word(self.ops + other.ops, self.domain, other.codomain)


def compose_twisted(word, pt: ParamTuple, grids: tuple, params: BaseParams, **kw) -> Word:
    """``S_{j_1} ... S_{j_k}`` with ``S_j S_k := S_j(s_k a) S_k(a)``; the rightmost letter acts first on ``a``."""
    ops = []
    a = pt
    cur = tuple(grids)
    for j in reversed(list(word)):
        op = s_op(j, a, cur, params, **kw)
        ops.append(op)
        cur = op.codomain
        a = a.transposed(j)
    return Word(ops, tuple(grids), cur)


def twisted_params(word, pt: ParamTuple) -> ParamTuple:
    """Parameter tuple seen by whatever acts after ``word``."""
    for j in reversed(list(word)):
        pt = pt.transposed(j)
    return pt


def default_grids(pt: ParamTuple, params: BaseParams, n_nodes: int, c: int = 0) -> tuple:
    return tuple(SpinGrid(CircleGrid(n_nodes), params.r, mu) for mu in pt.spin_parities(c))


def symmetric_test_states(grids: tuple, n_states: int = 6, n_modes: int = 2, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Products of smooth symmetric one-spin functions sampled on the grids, shape ``(n_states, d1, d2, d3)``."""
    states = []
    for s in range(n_states):
        fac = []
        for k, g in enumerate(grids):
            f = fourier_test_function(g.r, g.two_mu, n_modes=n_modes, seed=seed + 97 * s + k)
            u, m = g.flat_points()
            fac.append(np.concatenate([f(g.circle.nodes, lab) for lab in g.labels]))
        states.append(np.einsum("i,j,k->ijk", *fac))
    return np.array(states)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm((a - b).ravel()) / np.linalg.norm(b.ravel()))


def word_residual(name: str, lhs_word, rhs_word, pt: ParamTuple, params: BaseParams, n_nodes: int, *,
                  c: int = 0, tolerance: float | None = None, n_states: int = 6, **kw) -> Residual:
    grids = default_grids(pt, params, n_nodes, c)
    lw = compose_twisted(lhs_word, pt, grids, params, **kw)
    rw = compose_twisted(rhs_word, pt, grids, params, **kw)
    if lw.codomain != rw.codomain:
        raise ParityError("the two words end on different label parities")
    f = symmetric_test_states(grids, n_states)
    res = _rel(lw.apply(f), rw.apply(f))
    return Residual(name, list(lhs_word), list(rhs_word), res, n_nodes, tolerance=tolerance,
                    params={"r": params.r, "t": list(pt.t), "two_n": list(pt.two_n), "c": c})


def quadratic_inversion(index: int, pt: ParamTuple, params: BaseParams, *, n_nodes: int = 128,
                        points=None, tolerance: float = 1e-4) -> Residual:
    """``S_j(s_j b) S_j(b) = 1`` for an M-type letter at the tuple ``b = s_j a``.

    The inner transform then has ``Im t < 0`` and is continued by residue
    circles; the check is pointwise on a smooth symmetric test function.
    """
    if index % 2 == 0:
        raise ValueError("inversion check is for the M-type letters 1, 3, 5")
    b = pt.transposed(index)
    t, two_n = b.diff(index, index + 1)
    minv_guard(t, params)
    grids = default_grids(b, params, 2)
    mu = grids[index // 2].two_mu
    f = fourier_test_function(params.r, mu, n_modes=2, seed=DEFAULT_SEED + index)
    if points is None:
        points = [(0.17, mu), (0.61, mu + 2 * (params.r > 1))]
    res = m_inversion_check(t, two_n, f, points, params, two_mu_f=mu, n_nodes=n_nodes, tolerance=tolerance)
    res.name = f"coxeter-quadratic-S{index}"
    return res


def quadratic_d(index: int, pt: ParamTuple, params: BaseParams, n_nodes: int, c: int = 0,
                tolerance: float = 1e-12) -> Residual:
    """``S_j(s_j a) S_j(a) = 1`` for the D-type letters, on the full grid."""
    grids = default_grids(pt, params, n_nodes, c)
    w = compose_twisted([index, index], pt, grids, params)
    f = symmetric_test_states(grids, 2)
    return Residual(f"coxeter-quadratic-S{index}", None, None, _rel(w.apply(f), f), n_nodes, tolerance=tolerance,
                    params={"r": params.r})


COMMUTING = [(1, 3), (1, 4), (1, 5), (2, 4), (2, 5), (3, 5)]
BRAIDS = [(1, 2), (2, 3), (3, 4), (4, 5)]


def coxeter_check(pt: ParamTuple, params: BaseParams, n_nodes: int = 32, *, c: int = 0,
                  inversions: bool = True, inversion_nodes: int = 128, braid_tol: float = 1e-5) -> list[Residual]:
    """Quadratic, commuting and braid relations of the S-operators."""
    out = []
    for j in (2, 4):
        out.append(quadratic_d(j, pt, params, n_nodes, c))
    if inversions:
        for j in (1, 3, 5):
            out.append(quadratic_inversion(j, pt, params, n_nodes=inversion_nodes))
    for i, j in COMMUTING:
        out.append(word_residual(f"coxeter-commute-S{i}S{j}", [i, j], [j, i], pt, params, n_nodes, c=c,
                                 tolerance=1e-13, n_states=2))
    for i, j in BRAIDS:
        out.append(word_residual(f"coxeter-braid-S{i}S{j}", [i, j, i], [j, i, j], pt, params, n_nodes, c=c,
                                 tolerance=braid_tol))
    return out


R12_WORD = [2, 1, 3, 2]
R23_WORD = [4, 3, 5, 4]


def _sub(pt: ParamTuple, idx) -> ParamTuple:
    """Tuple with ``(a_i, a_j | a_k, a_l)`` moved to the slots the R-matrix word expects."""
    t = list(pt.t)
    n = list(pt.two_n)
    return [(t[i - 1], n[i - 1]) for i in idx]


def _embed(pairs, slots, filler: ParamTuple) -> ParamTuple:
    t, n = list(filler.t), list(filler.two_n)
    for (tt, nn), s in zip(pairs, slots):
        t[s - 1], n[s - 1] = tt, nn
    return ParamTuple(tuple(t), tuple(n))


def r12(pairs, grids: tuple, params: BaseParams, filler: ParamTuple, **kw) -> Word:
    """``R_12(b_1, b_2 | b_3, b_4) = S_2(b_1 - b_4) S_1(b_1 - b_3) S_3(b_2 - b_4) S_2(b_2 - b_3)``."""
    return compose_twisted(R12_WORD, _embed(pairs, (1, 2, 3, 4), filler), grids, params, **kw)


def r23(pairs, grids: tuple, params: BaseParams, filler: ParamTuple, **kw) -> Word:
    """``R_23(b_3, b_4 | b_5, b_6) = S_4(b_3 - b_6) S_3(b_3 - b_5) S_5(b_4 - b_6) S_4(b_4 - b_5)``."""
    return compose_twisted(R23_WORD, _embed(pairs, (3, 4, 5, 6), filler), grids, params, **kw)


def r13(pairs, grids: tuple, params: BaseParams, filler: ParamTuple, **kw) -> Word:
    """``R_13 = P_12 R_23 P_12``."""
    p = perm_op(1, 2, grids)
    inner = r23(pairs, p.codomain, params, filler, **kw)
    back = perm_op(1, 2, inner.codomain)
    return Word([p] + inner.ops + [back], tuple(grids), back.codomain)


def r_matrix(pair: str, pairs, grids: tuple, params: BaseParams, filler: ParamTuple, **kw) -> Word:
    return {"12": r12, "23": r23, "13": r13}[pair](pairs, grids, params, filler, **kw)


def std_r(pair: str, pairs, grids: tuple, params: BaseParams, filler: ParamTuple, **kw) -> Word:
    """``RR_ij = P_ij R_ij``: the standard-form R-matrix."""
    w = r_matrix(pair, pairs, grids, params, filler, **kw)
    i, j = int(pair[0]), int(pair[1])
    p = perm_op(i, j, w.codomain)
    return Word(w.ops + [p], w.domain, p.codomain)


def ybe_sides(pt: ParamTuple, params: BaseParams, grids: tuple, **kw):
    """Both sides of ``R23(a1,a2|a3,a4) R12(a1,a2|a5,a6) R23(a3,a4|a5,a6) = R12(a3,a4|a5,a6) R23(a1,a2|a5,a6) R12(a1,a2|a3,a4)``
    as words (rightmost factor acts first)."""
    A = _sub(pt, (1, 2, 3, 4))
    B = _sub(pt, (1, 2, 5, 6))
    C = _sub(pt, (3, 4, 5, 6))

    def chain(*makers):
        cur = tuple(grids)
        ops = []
        for mk, pairs in makers:
            w = mk(pairs, cur, params, pt, **kw)
            ops += w.ops
            cur = w.codomain
        return Word(ops, tuple(grids), cur)

    lhs = chain((r23, C), (r12, B), (r23, A))
    rhs = chain((r12, A), (r23, B), (r12, C))
    return lhs, rhs


def yb_standard_sides(pt: ParamTuple, params: BaseParams, grids: tuple, **kw):
    """``RR_12(u-v) RR_13(u-w) RR_23(v-w)`` and ``RR_23(v-w) RR_13(u-w) RR_12(u-v)``."""
    A = _sub(pt, (1, 2, 3, 4))
    B = _sub(pt, (1, 2, 5, 6))
    C = _sub(pt, (3, 4, 5, 6))

    def chain(*makers):
        cur = tuple(grids)
        ops = []
        for pair, pairs in makers:
            w = std_r(pair, pairs, cur, params, pt, **kw)
            ops += w.ops
            cur = w.codomain
        return Word(ops, tuple(grids), cur)

    lhs = chain(("23", C), ("13", B), ("12", A))
    rhs = chain(("12", A), ("13", B), ("23", C))
    return lhs, rhs


def _perm_word(seq, grids):
    ops = []
    cur = tuple(grids)
    for i, j in seq:
        p = perm_op(i, j, cur)
        ops.append(p)
        cur = p.codomain
    return Word(ops, tuple(grids), cur)


def ybe_check(pt: ParamTuple, params: BaseParams, n_nodes: int, *, c: int = 0, n_states: int = 4,
              refine: bool = True, tolerance: float | None = None, cap: int = MAX_FACTOR_DIM) -> Residual:
    """Yang-Baxter residual on symmetric test states, worst of the two forms, with a refinement history.

    The standard form is also compared with the ``P_12 P_13 P_23``-multiplied
    relation, whose sides must coincide with it to rounding (``form_gap``).
    """
    levels = [n_nodes, 2 * n_nodes] if refine else [n_nodes]
    hist, hist_rrr, hist_std, gap = [], [], [], 0.0
    for n in levels:
        grids = default_grids(pt, params, n, c)
        if grids[0].size > cap:
            raise ResourceLimitError(f"factor dimension {grids[0].size} exceeds the cap {cap}")
        f = symmetric_test_states(grids, n_states)
        lhs, rhs = ybe_sides(pt, params, grids, cap=cap)
        lf, rf = lhs.apply(f), rhs.apply(f)
        slhs, srhs = yb_standard_sides(pt, params, grids, cap=cap)
        sl, sr = slhs.apply(f), srhs.apply(f)
        # P12 P13 P23 on the left of the first form, P23 P13 P12 on the right one
        pl = _perm_word([(2, 3), (1, 3), (1, 2)], lhs.codomain).apply(lf)
        pr = _perm_word([(1, 2), (1, 3), (2, 3)], rhs.codomain).apply(rf)
        gap = max(gap, _rel(pl, sl), _rel(pr, sr))
        hist_rrr.append((n, _rel(lf, rf)))
        hist_std.append((n, _rel(sl, sr)))
        hist.append((n, max(hist_rrr[-1][1], hist_std[-1][1])))
    meta = {"r": params.r, "t": list(pt.t), "two_n": list(pt.two_n), "c": c, "form_gap": gap,
            "rrr_history": hist_rrr, "standard_history": hist_std}
    return Residual("ybe", None, None, hist[0][1], n_nodes, hist, meta, tolerance)


def difference_check(pt: ParamTuple, params: BaseParams, n_nodes: int = 16, shift=(0.07, 4), *,
                     c: int = 0, tolerance: float = 1e-10) -> Residual:
    """``RR_12`` is unchanged when ``u`` and ``v`` are shifted by the same pair."""
    sp = spectral_from_params(pt)
    dl, dk = shift
    moved = SpectralParams((sp.u[0] + dl, sp.u[1] + dk), (sp.v[0] + dl, sp.v[1] + dk), sp.w, sp.g1, sp.g2, sp.g3)
    pt2 = spectral_map(moved)
    grids = default_grids(pt, params, n_nodes, c)
    if default_grids(pt2, params, n_nodes, c) != grids:
        raise ParityError("the shift changes the label parities")
    f = symmetric_test_states(grids, 3)
    a = std_r("12", _sub(pt, (1, 2, 3, 4)), grids, params, pt).apply(f)
    b = std_r("12", _sub(pt2, (1, 2, 3, 4)), grids, params, pt2).apply(f)
    return Residual("r-difference", None, None, _rel(b, a), n_nodes, tolerance=tolerance,
                    params={"r": params.r, "shift": list(shift)})


def explicit_r12(pairs, f_grid: np.ndarray, grids: tuple, params: BaseParams,
                 policy: TruncationPolicy = DEFAULT_POLICY) -> np.ndarray:
    """``[P_12 R_12 f](sigma_1, sigma_2)`` from the closed-form double-integral kernel.

    ``f_grid`` has shape ``(d1, d2)`` on ``grids[:2]``; the output lives on the
    output grids of ``P_12 R_12``.
    """
    (t1, n1), (t2, n2), (t3, n3), (t4, n4) = pairs
    g1, g2 = grids[0], grids[1]
    kappa = params.kappa(policy)
    h = 0.5 * (params.tau + params.sigma)
    mu_o1 = (g1.two_mu + n1 - n3) % 2
    mu_o2 = (g2.two_mu + n2 - n4) % 2
    o1 = SpinGrid(g1.circle, g1.r, mu_o2)
    o2 = SpinGrid(g2.circle, g2.r, mu_o1)
    ui = g1.circle.nodes
    vi = g2.circle.nodes
    xo = o1.circle.nodes
    yo = o2.circle.nodes
    w = g1.circle.weight * g2.circle.weight
    out = np.zeros((o1.size, o2.size), dtype=complex)
    n_1, n_2 = g1.n_nodes, g2.n_nodes
    no1, no2 = o1.n_nodes, o2.n_nodes
    norm = kappa ** 2 / (gamma_periodic(2 * (t1 - t3), 2 * (n1 - n3), params, policy)
                         * gamma_periodic(2 * (t2 - t4), 2 * (n2 - n4), params, policy))
    for a, m1 in enumerate(o1.labels):
        for b, m2 in enumerate(o2.labels):
            x1 = xo[:, None, None, None]
            x2 = yo[None, :, None, None]
            acc = np.zeros((no1, no2), dtype=complex)
            for c_, k1 in enumerate(g1.labels):
                for d_, k2 in enumerate(g2.labels):
                    u1 = ui[None, None, :, None]
                    u2 = vi[None, None, None, :]
                    val = np.ones((no1, no2, n_1, n_2), dtype=complex)
                    for e in (1, -1):
                        for d in (1, -1):
                            val = val * gamma_periodic(t1 - t3 + e * x2 + d * u1, n1 - n3 + e * m2 + d * k1, params, policy)
                            val = val * gamma_periodic(t2 - t4 + e * x1 + d * u2, n2 - n4 + e * m1 + d * k2, params, policy)
                            val = val * gamma_periodic(h - t2 + t3 + e * u1 + d * u2, -(n2 - n3) + e * k1 + d * k2, params, policy)
                    val = val * inv_gamma_pm2(u1, k1, params, policy) * inv_gamma_pm2(u2, k2, params, policy)
                    fv = f_grid[c_ * n_1:(c_ + 1) * n_1, d_ * n_2:(d_ + 1) * n_2]
                    acc += np.einsum("abij,ij->ab", val, fv)
            pref = np.ones((no1, no2), dtype=complex)
            for e in (1, -1):
                for d in (1, -1):
                    pref = pref * gamma_periodic(h - t1 + t4 + e * xo[:, None] + d * yo[None, :],
                                                 -(n1 - n4) + e * m1 + d * m2, params, policy)
            out[a * no1:(a + 1) * no1, b * no2:(b + 1) * no2] = norm * pref * acc * w
    return out


def explicit_r_check(pt: ParamTuple, params: BaseParams, n_nodes: int = 16, *, c: int = 0,
                     tolerance: float = 1e-6) -> Residual:
    """Factorized ``P_12 R_12`` against the closed-form kernel on smooth symmetric inputs."""
    grids = default_grids(pt, params, n_nodes, c)
    pairs = _sub(pt, (1, 2, 3, 4))
    w = std_r("12", pairs, grids, params, pt)
    states = symmetric_test_states(grids, 3)
    worst = 0.0
    for st in states:
        f12 = st[:, :, 0] / st[0, 0, 0]
        full = w.apply(f12[None, :, :, None] * np.ones(grids[2].size)[None, None, None, :])[0, :, :, 0]
        ref = explicit_r12(pairs, f12, grids, params)
        worst = max(worst, _rel(full, ref))
    return Residual("r-explicit", None, None, worst, n_nodes, tolerance=tolerance,
                    params={"r": params.r, "t": list(pt.t), "two_n": list(pt.two_n)})


def unitarity_check(pt: ParamTuple, params: BaseParams, *, n_nodes: int = 128, point=(0.17, 0.41),
                    tolerance: float = 1e-5) -> Residual:
    """``RR_12(u; g_1, g_2) RR_21(-u; g_2, g_1) = 1`` with ``RR_21(-u; g_2, g_1) = P_12 RR_12(-u; g_2, g_1) P_12``.

    The right factor acts first.  Written out the product is
    ``P D(a_1-a_4) M_1(a_1-a_3) M_2(a_2-a_4) D(a_2-a_3) D(a_3-a_2) M_1(a_3-a_1) M_2(a_4-a_2) D(a_4-a_1) P``.
    On inputs ``P [D(a_1-a_4) h_1 h_2]`` the D-pairs are evaluated pointwise and the
    two M-pairs act on separate spins, so each is a transform inversion whose
    inner contour is continued by residue circles.
    """
    t, n = pt.t, pt.two_n
    grids = default_grids(pt, params, 2)
    m1, m2 = grids[0].two_mu, grids[1].two_mu
    x1, x2 = point
    h1 = fourier_test_function(params.r, m1, 2, seed=3)
    h2 = fourier_test_function(params.r, m2, 2, seed=5)
    a1 = m_inversion_check(t[2] - t[0], n[2] - n[0], h1, [(x1, m1)], params, two_mu_f=m1, n_nodes=n_nodes)
    a2 = m_inversion_check(t[3] - t[1], n[3] - n[1], h2, [(x2, m2)], params, two_mu_f=m2, n_nodes=n_nodes)
    env = d_coeff(t[0] - t[3], n[0] - n[3], x1, m1, x2, m2, params)
    cancel = (d_coeff(t[3] - t[0], n[3] - n[0], x1, m1, x2, m2, params) * env
              * d_coeff(t[1] - t[2], n[1] - n[2], x1, m1, x2, m2, params)
              * d_coeff(t[2] - t[1], n[2] - n[1], x1, m1, x2, m2, params))
    lhs = complex(env * cancel * a1.lhs[0] * a2.lhs[0])
    rhs = complex(env * a1.rhs[0] * a2.rhs[0])
    return Residual.scalar("unitarity", lhs, rhs, n_nodes=n_nodes, tolerance=tolerance,
                           params={"r": params.r, "t": list(pt.t), "two_n": list(pt.two_n),
                                   "m1": a1.residual, "m2": a2.residual})
