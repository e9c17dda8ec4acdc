"""Trapezoidal circle quadrature combined with the finite sum over ``Z_r + mu``.

A contour is described additively: the circle ``|z| = radius`` corresponds to
the horizontal line ``Im u = -log(radius) / 2 pi`` and the nodes are
``u_j = phase_offset + j / n_nodes`` on it.  Kernels are callables
``kernel(u: ndarray, two_m: int) -> ndarray`` vectorized over ``u``.

Grid-discretized operators use the flat index ``label_index * n_nodes + node``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gamma import BaseParams, factor_poles_additive
from .errors import ContourPinchError, ConvergenceError, NodeSingularityError, PeriodicityError

Kernel = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class CircleGrid:
    n_nodes: int
    radius: float = 1.0
    phase_offset: float = 0.0

    def __post_init__(self):
        n = self.n_nodes
        # powers of two by default; any even count keeps the n/2 error subrule
        if n < 1 or (n > 1 and n % 2):
            raise ValueError(f"n_nodes must be 1 or even, got {n}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not 0 <= self.phase_offset < 1:
            raise ValueError("phase_offset must lie in [0, 1)")

    @property
    def shift(self) -> float:
        """Imaginary part of the additive contour."""
        return -math.log(self.radius) / (2 * math.pi)

    @property
    def nodes(self) -> np.ndarray:
        return self.phase_offset + np.arange(self.n_nodes) / self.n_nodes + 1j * self.shift

    @property
    def z_nodes(self) -> np.ndarray:
        return np.exp(2j * math.pi * self.nodes)

    @property
    def weight(self) -> float:
        return 1.0 / self.n_nodes

    def refined(self, factor: int = 2) -> "CircleGrid":
        return CircleGrid(self.n_nodes * factor, self.radius, self.phase_offset)

    def symmetric(self) -> bool:
        """Node set invariant under ``u -> -u`` (mod 1)."""
        off = self.phase_offset * self.n_nodes * 2
        return self.radius == 1.0 and abs(off - round(off)) < 1e-12


@dataclass(frozen=True)
class SpinGrid:
    """Circle nodes times the labels ``{mu, 1 + mu, ..., r - 1 + mu}``; ``two_mu`` is ``2 mu``."""

    circle: CircleGrid
    r: int
    two_mu: int = 0

    def __post_init__(self):
        if self.two_mu not in (0, 1):
            raise ValueError("two_mu must be 0 or 1")
        if self.r < 1:
            raise ValueError("r must be positive")

    @property
    def labels(self) -> list[int]:
        """Doubled labels ``2m``."""
        return [2 * k + self.two_mu for k in range(self.r)]

    @property
    def n_nodes(self) -> int:
        return self.circle.n_nodes

    @property
    def size(self) -> int:
        return self.circle.n_nodes * self.r

    def flat_points(self):
        """Arrays ``(u, two_m)`` of length ``size`` in flat-index order."""
        u = np.tile(self.circle.nodes, self.r)
        m = np.repeat(np.array(self.labels), self.circle.n_nodes)
        return u, m

    def with_circle(self, circle: CircleGrid) -> "SpinGrid":
        return SpinGrid(circle, self.r, self.two_mu)

    def reflection_index(self) -> np.ndarray:
        """Permutation of flat indices realizing ``(u, m) -> (-u, -m mod r)``."""
        c = self.circle
        if not c.symmetric():
            raise ValueError("reflection needs a unit-radius grid with offset 0 or 1/(2n)")
        n = c.n_nodes
        s = int(round(2 * c.phase_offset * n))
        j = np.arange(n)
        jr = (-j - s) % n
        out = np.empty(self.size, dtype=np.int64)
        for li, two_m in enumerate(self.labels):
            lr = self.labels.index((-two_m) % (2 * self.r))
            out[li * n + j] = lr * n + jr
        return out


@dataclass
class QuadResult:
    value: complex
    error: float
    n_nodes: int
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class Detour:
    """Small ccw circle around ``center`` for label ``two_m``, counted with ``sign``."""

    center: complex
    radius: float
    two_m: int
    sign: int
    n_points: int = 64


def _finite(vals, where):
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NodeSingularityError(f"non-finite kernel value at {where} node {bad}", location=(where, bad))


def detour_integral(kernel: Kernel, d: Detour, n: int | None = None) -> complex:
    """``sign * \\oint kernel(u) du`` over a small ccw circle in the u-plane."""
    n = n or d.n_points
    th = 2 * math.pi * np.arange(n) / n
    e = np.exp(1j * th)
    vals = np.asarray(kernel(d.center + d.radius * e, d.two_m), dtype=complex)
    _finite(vals, f"detour {d.center}")
    return d.sign * complex(np.mean(vals * 1j * d.radius * e) * 2 * math.pi)


def integrate_sum(kernel: Kernel, grid: SpinGrid, detours: Sequence[Detour] = ()) -> QuadResult:
    """``sum_m int_0^1 kernel(u, m) du`` by the trapezoid rule, error from the n/2 subrule."""
    total = 0j
    half = 0j
    u = grid.circle.nodes
    for two_m in grid.labels:
        vals = np.asarray(kernel(u, two_m), dtype=complex)
        _finite(vals, f"label {two_m}/2")
        total += vals.mean()
        half += vals[::2].mean() if vals.size > 1 else vals.mean()
    extra = sum(detour_integral(kernel, d) for d in detours)
    total += extra
    half += extra
    return QuadResult(complex(total), float(abs(total - half)), grid.n_nodes, [(grid.n_nodes, complex(total))])


def refine_until(kernel: Kernel, grid: SpinGrid, rel_tol: float, n_max: int = 4096,
                 n_start: int = 32, detours: Sequence[Detour] = ()) -> QuadResult:
    """Double the node count from ``n_start`` until successive values agree to ``rel_tol``."""
    history = []
    circle = CircleGrid(n_start, grid.circle.radius, grid.circle.phase_offset)
    prev = None
    while True:
        res = integrate_sum(kernel, grid.with_circle(circle), detours)
        history.append((circle.n_nodes, res.value))
        if prev is not None:
            diff = abs(res.value - prev)
            if diff < rel_tol * abs(res.value):
                return QuadResult(res.value, diff, circle.n_nodes, history)
        if circle.n_nodes >= n_max:
            raise ConvergenceError(f"no convergence to rel_tol={rel_tol} by n={circle.n_nodes}", history)
        prev = res.value
        circle = circle.refined()


def periodicity_probe(kernel: Kernel, labels: Sequence[int], n_samples: int = 8, rtol: float = 1e-8,
                      seed: int = 7, shift: float = 0.0):
    """Reject kernels that are not 1-periodic in ``u`` (compared at 8 sample points)."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.5, 0.5, n_samples) + 1j * shift
    for two_m in labels:
        a = np.asarray(kernel(u, two_m), dtype=complex)
        b = np.asarray(kernel(u + 1.0, two_m), dtype=complex)
        scale = np.maximum(np.abs(a), 1e-300)
        if np.max(np.abs(a - b) / scale) > rtol:
            raise PeriodicityError(f"kernel is not 1-periodic in u for label {two_m}/2")


@dataclass(frozen=True)
class GridOperator:
    """Dense matrix between spin grids with quadrature weights folded into the columns."""

    domain: SpinGrid
    codomain: SpinGrid
    matrix: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def __matmul__(self, other: "GridOperator") -> "GridOperator":
        return GridOperator(other.domain, self.codomain, self.matrix @ other.matrix)

    @classmethod
    def diagonal(cls, grid: SpinGrid, values: np.ndarray) -> "GridOperator":
        return cls(grid, grid, np.diag(np.asarray(values, dtype=complex)))

    @classmethod
    def identity(cls, grid: SpinGrid) -> "GridOperator":
        return cls(grid, grid, np.eye(grid.size, dtype=complex))


def build_operator(kernel2, out_grid: SpinGrid, in_grid: SpinGrid) -> GridOperator:
    """Matrix ``A[o, i] = w_i K(u_o, m_o; u_i, m_i)``; ``kernel2`` broadcasts over 2-D arrays.

    ``kernel2(u_out[:, None], two_m_out[:, None], u_in[None, :], two_m_in[None, :])``
    is called once per (output label, input label) block with scalar labels.
    """
    uo = out_grid.circle.nodes
    ui = in_grid.circle.nodes
    no, ni = out_grid.n_nodes, in_grid.n_nodes
    mat = np.empty((out_grid.size, in_grid.size), dtype=complex)
    w = in_grid.circle.weight
    for a, mo in enumerate(out_grid.labels):
        for b, mi in enumerate(in_grid.labels):
            blk = np.asarray(kernel2(uo[:, None], mo, ui[None, :], mi), dtype=complex)
            blk = np.broadcast_to(blk, (no, ni))
            _finite(blk, f"block ({mo}/2, {mi}/2)")
            mat[a * no:(a + 1) * no, b * ni:(b + 1) * ni] = w * blk
    return GridOperator(in_grid, out_grid, mat)


def symmetrizer(grid: SpinGrid) -> GridOperator:
    """Projector ``f -> (f(u, m) + f(-u, -m mod r)) / 2`` realized exactly on the grid."""
    idx = grid.reflection_index()
    mat = 0.5 * np.eye(grid.size, dtype=complex)
    mat[np.arange(grid.size), idx] += 0.5
    return GridOperator(grid, grid, mat)


def reduce_symmetric_sum(c: Sequence[complex], r: int, two_mu: int = 0, *, verify: bool = False):
    """Fold ``sum_{m in Z_r + mu} c_m`` using ``c_m = c_{-m mod r}``.

    ``c[i]`` belongs to the label ``m = i + mu``.  With ``verify=True`` the folded
    and plain sums are both returned.
    """
    c = list(c)
    if len(c) != r:
        raise ValueError("need exactly r per-label values")
    if two_mu == 0:
        if r % 2 == 0:
            folded = c[0] + c[r // 2] + 2 * sum(c[1:r // 2])
        else:
            folded = c[0] + 2 * sum(c[1:(r - 1) // 2 + 1])
    else:
        if r % 2 == 0:
            folded = 2 * sum(c[:r // 2])
        else:
            folded = c[(r - 1) // 2] + 2 * sum(c[:(r - 1) // 2])
    if verify:
        return folded, sum(c)
    return folded


def pole_margin(pole_sets, contour: CircleGrid) -> float:
    """Minimum relative radial distance ``||pole| - radius| / radius`` over relevant poles.

    Poles outside ``[radius/50, 50 radius]`` are ignored.
    """
    rad = contour.radius
    best = math.inf
    for poles in pole_sets:
        a = np.abs(np.asarray(poles, dtype=complex).ravel())
        a = a[(a >= rad / 50) & (a <= 50 * rad)]
        if a.size:
            best = min(best, float(np.min(np.abs(a - rad)) / rad))
    return best


def require_margin(pole_sets, contour: CircleGrid, delta: float = 1e-3) -> float:
    m = pole_margin(pole_sets, contour)
    if m < delta:
        raise ContourPinchError(f"pole margin {m:.3g} below {delta:g}", margin=m)
    return m


def separating_margin(inner, outer, radius: float) -> float:
    """Signed margin: positive iff all ``inner`` poles lie inside and all ``outer`` outside."""
    best = math.inf
    for z in np.abs(np.asarray(inner, dtype=complex).ravel()):
        best = min(best, (radius - z) / radius)
    for z in np.abs(np.asarray(outer, dtype=complex).ravel()):
        best = min(best, (z - radius) / radius)
    return best


def best_radius(inner, outer, lo: float = 0.8, hi: float = 1.25, n: int = 401):
    """1-D scan for the radius maximizing the separating margin."""
    radii = np.linspace(lo, hi, n)
    margins = [separating_margin(inner, outer, rr) for rr in radii]
    k = int(np.argmax(margins))
    return float(radii[k]), float(margins[k])


def _wrap(x):
    """Shift real parts into [-1/2, 1/2)."""
    return x - np.floor(x.real + 0.5)


def plan_detours(factors, params: BaseParams, two_m: int, y0: float = 0.0, depth: int = 6,
                 merge_frac: float = 0.25, eps_tol: float = 1e-17):
    """Residue circles turning the line ``Im u = y0`` into a separating contour.

    ``factors`` lists ``(c, eps, two_N)`` for integrand factors ``Gamma(c + eps u, N)``.
    Poles of ``eps = -1`` factors belong above the line and those of ``eps = +1``
    factors below it; every pole on the wrong side gets a circle, ``+1`` for the
    former and ``-1`` for the latter.  Nearby wrong-side poles of equal sign share
    one circle.
    """
    pos, kind = [], []
    for c, eps, two_n in factors:
        xs = _wrap(factor_poles_additive(c, eps, two_n, params, depth))
        pos.append(xs)
        kind.append(np.full(xs.shape, -int(eps)))
    if not pos:
        return []
    pos, kind = np.concatenate(pos), np.concatenate(kind)
    wrong = ((kind == 1) & (pos.imag < y0)) | ((kind == -1) & (pos.imag > y0))
    if not wrong.any():
        return []
    images = np.concatenate([pos - 1, pos, pos + 1])
    img_kind = np.tile(kind, 3)
    img_wrong = np.tile(wrong, 3)
    w_idx = np.flatnonzero(wrong)
    wp, wk = pos[w_idx], kind[w_idx]
    # global merge threshold from the distance to poles that must stay outside
    forb = np.inf
    for x, k in zip(wp, wk):
        others = images[~(img_wrong & (img_kind == k))]
        if others.size:
            forb = min(forb, float(np.min(np.abs(others - x))))
    thresh = merge_frac * forb
    parent = list(range(len(wp)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(wp)):
        for j in range(i + 1, len(wp)):
            if wk[i] == wk[j] and abs(wp[i] - wp[j]) < thresh:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(wp)):
        groups.setdefault(find(i), []).append(i)
    detours = []
    for members in groups.values():
        pts = wp[members]
        center = complex(pts.mean())
        r_in = float(np.max(np.abs(pts - center)))
        inside = np.zeros(images.shape, dtype=bool)
        for x in pts:
            inside |= np.abs(images - x) < 1e-14
        outside = images[~inside]
        r_out = float(np.min(np.abs(outside - center))) if outside.size else 1.0
        if r_out <= 1.5 * r_in:
            raise ContourPinchError(f"no residue circle separates poles near {center}", margin=r_out - r_in)
        rho = math.sqrt(r_in * r_out) if r_in > 0 else 0.5 * r_out
        ratio = max(r_in / rho, rho / r_out)
        n_pts = int(min(1024, max(32, 2 ** math.ceil(math.log2(math.log(eps_tol) / math.log(ratio))))))
        detours.append(Detour(center, rho, int(two_m), int(wk[members[0]]), n_pts))
    return detours


def factor_pole_set(factors, params: BaseParams, depth: int = 6) -> np.ndarray:
    pos = [_wrap(factor_poles_additive(c, eps, two_n, params, depth)) for c, eps, two_n in factors]
    return np.concatenate(pos) if pos else np.zeros(0, dtype=complex)


def best_line(factor_lists, params: BaseParams, half_width: float = 0.05, n: int = 201) -> float:
    """Height ``y0`` in ``[-half_width, half_width]`` farthest from all factor poles."""
    poles = np.concatenate([factor_pole_set(f, params) for f in factor_lists])
    ys = np.linspace(-half_width, half_width, n)
    if poles.size == 0:
        return 0.0
    im = poles.imag
    dist = np.min(np.abs(im[None, :] - ys[:, None]), axis=1)
    best = float(np.max(dist))
    # prefer the candidate closest to zero among the (near) optimal ones
    ok = np.flatnonzero(dist >= best - 1e-12)
    return float(ys[ok[np.argmin(np.abs(ys[ok]))]])
