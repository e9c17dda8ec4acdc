"""Reference verification suites shared by the command line and the acceptance tests.

Each suite takes keyword settings and returns a list of :class:`Residual` records.
"""
from __future__ import annotations

import cmath
import time

import numpy as np

from .gamma import BaseParams

BETA_NOMES = (0.15 * cmath.exp(0.4j), 0.2)
BAILEY_NOMES = (0.1 * cmath.exp(0.3j), 0.1)
LATTICE_NOME = 0.1 * cmath.exp(0.3j)
YBE_NOMES = (0.01 * cmath.exp(0.3j), 0.01)

# descriptive identity tag carried by every record
TAGS = {
    "beta-integral": "beta-integral",
    "bailey-pair": "bailey-pair",
    "chain-step": "bailey-chain-step",
    "operator-star-triangle": "operator-star-triangle",
    "transform-inversion": "transform-inversion",
    "unit-limit": "unit-limit",
    "e7-transformation": "e7-transformation",
    "str-functional": "star-triangle-functional",
    "str-normalized": "star-triangle-normalized",
    "norm-equations": "normalization-equations",
    "w-inversion": "boltzmann-inversion",
    "positivity": "physical-positivity",
    "partition-order": "partition-contraction-order",
    "free-energy-trend": "free-energy-trend",
    "r-explicit": "r-matrix-explicit-kernel",
    "unitarity": "r-matrix-unitarity",
    "r-difference": "r-matrix-difference-property",
    "ybe": "yang-baxter",
}


def tag_for(name: str) -> str:
    if name.startswith("coxeter-"):
        return "coxeter-" + name.split("-")[1]
    return TAGS.get(name, name)


def base_params(r: int, nomes, physical: bool = False) -> BaseParams:
    p, q = nomes
    if physical:
        q = complex(p).conjugate()
    return BaseParams.from_nomes(r, p, q)


def beta_integral(r: int = 2, two_mu: int = 0, nomes=BETA_NOMES, seed: int = 0x5EED, count: int = 20,
                  normalization: str = "additive", n_max: int = 512, tolerance: float = 1e-8, **_):
    from .beta import sample_param_sets, verify_beta
    params = base_params(r, nomes)
    return [verify_beta(ps, normalization=normalization, tolerance=tolerance, n_max=n_max)
            for ps in sample_param_sets(params, two_mu, count=count, seed=seed)]


BAILEY_T = (0.1 + 0.12j, -0.2 + 0.1j, 0.3 + 0.15j, 0.05 + 0.11j)
BAILEY_N = (0, 2, -2, 2)
BAILEY_POINTS = ((0.13, 0), (0.31, 2), (-0.2, 0), (0.05, 2), (0.4, 0), (0.27, 2))


def bailey_pair(r: int = 2, nomes=BETA_NOMES, nodes: int | None = None, **_):
    """Seed pair at six points and one chain step at four points."""
    from .bailey import bailey_pair_check, bailey_pair_seed, chain_step
    params = base_params(r, nomes)
    pair = bailey_pair_seed(BAILEY_T, BAILEY_N, params)
    pts = [(v, k + pair.beta_parity) for v, k in BAILEY_POINTS]
    out = [bailey_pair_check(pair, pts, params, tolerance=1e-8)]
    step = chain_step(pair, 0.02 + 0.03j, 2, 0.21, 0, params, n_nodes=nodes)
    pts2 = [(v, k + step.beta_parity) for v, k in BAILEY_POINTS[:4]]
    res = bailey_pair_check(step, pts2, params, tolerance=1e-7)
    res.name = "chain-step"
    out.append(res)
    return out


STR_CASES = {
    1: [dict(two_l=0, two_n=0, two_j=0, two_mu_a=0), dict(two_l=1, two_n=-1, two_j=1, two_mu_a=0)],
    2: [dict(two_l=2, two_n=-2, two_j=1, two_mu_a=1), dict(two_l=1, two_n=2, two_j=1, two_mu_a=0)],
}


def operator_str(r: int = 1, nomes=BAILEY_NOMES, nodes: int = 64, tolerance: float | None = None, **_):
    """Operator star-triangle relation at ``nodes / 2`` and ``nodes``."""
    from .bailey import str_operator_check
    params = base_params(r, nomes)
    tol = tolerance or (1e-6 if r == 1 else 1e-5)
    out = []
    for case in STR_CASES.get(r, [dict(two_l=0, two_n=0, two_j=0, two_mu_a=0)]):
        hist = []
        res = None
        for n in (nodes // 2, nodes):
            res = str_operator_check(0.03 + 0.05j, case["two_l"], -0.02 + 0.06j, case["two_n"], 0.17,
                                     case["two_j"], params, n_nodes=n, two_mu_a=case["two_mu_a"], tolerance=tol)
            hist.append((n, res.residual))
        res.history = hist
        out.append(res)
    return out


def inversion(r: int = 1, nomes=BAILEY_NOMES, nodes: int = 128, **_):
    """Transform inversion on a guarded parameter and the unit limit ratio test."""
    from .bailey import fourier_test_function, m_inversion_check, unit_limit
    from .residual import Residual
    params = base_params(r, nomes)
    f = fourier_test_function(r, 0)
    pts = [(0.21, 0), (0.33, 2 % (2 * r))]
    out = [m_inversion_check(0.01 - 0.02j, 0, f, pts, params, n_nodes=nodes, tolerance=1e-4)]
    devs, ratios = unit_limit(f, 0.21, 0, params)
    worst = max(abs(x - 0.5) / 0.5 for x in ratios)
    out.append(Residual("unit-limit", devs, ratios, worst, None, tolerance=0.2,
                        params={"r": r, "s": [0.01, 0.005, 0.0025]}))
    return out


def e7(r: int = 2, two_mu: int = 0, nomes=BETA_NOMES, seed: int = 0x5EED, count: int = 2, **_):
    from .vfunc import e7_map, sample_vparams, verify_e7
    params = base_params(r, nomes)
    out = []
    for flip in (False, True):
        for vp in sample_vparams(params, two_mu, count=count, flip=flip, seed=seed):
            res = verify_e7(vp)
            back = e7_map(e7_map(vp))
            res.params["flip"] = flip
            # labels return exactly, additive parameters up to rounding
            res.params["involution"] = bool(back.two_n == vp.two_n and back.two_mu == vp.two_mu
                                            and max(abs(a - b) for a, b in zip(back.t, vp.t)) < 1e-15)
            out.append(res)
    return out


def _ybe_setup(r, nomes, seed):
    from .ybe import sample_param_tuple
    params = base_params(r, nomes)
    pt = sample_param_tuple(params, seed=seed, two_n=(0, 2, 0, -2, 2, 0) if r > 1 else None)
    return params, pt


def coxeter(r: int = 1, nomes=YBE_NOMES, seed: int = 0x5EED, nodes: int = 32, inversion_nodes: int = 64, **_):
    from .ybe import coxeter_check
    params, pt = _ybe_setup(r, nomes, seed)
    return coxeter_check(pt, params, nodes, inversion_nodes=inversion_nodes)


def rmatrix(r: int = 1, nomes=YBE_NOMES, seed: int = 0x5EED, nodes: int = 16, inversion_nodes: int = 64, **_):
    from .ybe import difference_check, explicit_r_check, unitarity_check
    params, pt = _ybe_setup(r, nomes, seed)
    return [explicit_r_check(pt, params, nodes), unitarity_check(pt, params, n_nodes=inversion_nodes),
            difference_check(pt, params, nodes)]


def ybe(r: int = 1, nomes=YBE_NOMES, seed: int = 0x5EED, nodes: int | None = None, tolerance: float | None = None, **_):
    from .ybe import ybe_check
    params, pt = _ybe_setup(r, nomes, seed)
    n = nodes or (24 if r == 1 else 16)
    tol = tolerance or (1e-4 if r == 1 else 1e-3)
    res = ybe_check(pt, params, n, tolerance=tol)
    return [res]


LATTICE_POINTS = (0.13, 0.41, 0.77)


def lattice_str(r: int = 2, nome=LATTICE_NOME, alpha: float = 0.1, beta: float = 0.12, seed: int = 0x5EED, **_):
    """Functional and normalized star-triangle relations, normalization equations, inversion, positivity."""
    from . import lattice as lat
    from .quadrature import CircleGrid, SpinGrid
    from .residual import Residual
    params = base_params(r, (nome, None), physical=True)
    eta = params.eta.real
    spins = tuple(zip(LATTICE_POINTS, (0, 2 % (2 * r), 0)))
    mu = 0
    out = [lat.verify_str_functional(alpha, 0, beta, 0, spins, params, mu, tolerance=1e-6)]
    if r > 1:
        out.append(lat.verify_str_functional(alpha, 2, beta, 0, spins, params, mu, tolerance=1e-6))
    out.append(lat.verify_str_functional(alpha, 0, beta, 0, spins, params, mu, normalized=True, tolerance=1e-6))
    rng = np.random.default_rng(seed)
    alphas = np.sort(rng.uniform(0.05, 0.95, 5)) * eta
    worst = max(max(lat.norm_equations(a, params)) for a in alphas)
    out.append(Residual("norm-equations", None, None, worst, None, tolerance=1e-9,
                        params={"r": r, "alpha": list(alphas)}))
    x = rng.uniform(0, 1, 8)
    y = rng.uniform(0, 1, 8)
    worst = 0.0
    for two_l, two_k, two_m in ((0, 0, 0), (2, 0, 2), (1, 1, 0)):
        a = lat.boltzmann_w(alpha, two_l, x, two_k, y, two_m, params)
        b = lat.boltzmann_w(-alpha, -two_l, x, two_k, y, two_m, params)
        worst = max(worst, float(np.max(np.abs(a * b - 1))))
    out.append(Residual("w-inversion", None, None, worst, None, tolerance=1e-12, params={"r": r, "alpha": alpha}))
    rep = lat.positivity_report(alpha, params, SpinGrid(CircleGrid(16, 1.0, 1 / 32), r, 0))
    bad = max(rep["w_imag"], rep["rho_imag"])
    ok = rep["w_min"] > 0 and rep["rho_min"] > 0
    out.append(Residual("positivity", None, None, bad if ok else float("inf"), None, tolerance=1e-10,
                        params=dict(rep, r=r, alpha=alpha)))
    return out


def lattice_partition(r: int = 2, nome=LATTICE_NOME, alpha: float = 0.1, nodes: int = 16, **_):
    """Contraction-order independence, positivity of ``Z`` and the free-energy trend report."""
    from . import lattice as lat
    from .quadrature import CircleGrid, SpinGrid
    from .residual import Residual
    params = base_params(r, (nome, None), physical=True)
    grid = SpinGrid(CircleGrid(nodes), r, 0)
    out = []
    worst, zs = 0.0, []
    for shape in ((2, 1), (2, 2), (3, 2)):
        zr = lat.partition_function(*shape, alpha, params, grid, order="row")
        zc = lat.partition_function(*shape, alpha, params, grid, order="col")
        worst = max(worst, abs(zr / zc - 1))
        zs.append(zr)
    out.append(Residual("partition-order", zs, None, worst, nodes, tolerance=1e-10, params={"r": r, "alpha": alpha}))
    trend = lat.free_energy_trend(alpha, params, grid)
    pos = max(abs(t["Z"].imag) / abs(t["Z"]) for t in trend)
    ok = all(t["Z"].real > 0 for t in trend)
    out.append(Residual("free-energy-trend", [t["log_Z_per_site"].real for t in trend], None,
                        pos if ok else float("inf"), nodes, tolerance=1e-10,
                        params={"r": r, "shapes": [t["shape"] for t in trend], "note": "reported, not asserted"}))
    return out


SUITES = {
    ("verify", "beta-integral"): beta_integral,
    ("verify", "bailey-pair"): bailey_pair,
    ("verify", "str"): operator_str,
    ("verify", "minv"): inversion,
    ("verify", "e7"): e7,
    ("verify", "coxeter"): coxeter,
    ("verify", "rmatrix"): rmatrix,
    ("verify", "ybe"): ybe,
    ("lattice", "str"): lattice_str,
    ("lattice", "partition"): lattice_partition,
}


def timed(fn, **kw):
    """Run a suite, attaching the wall time of the whole suite to each record."""
    t0 = time.perf_counter()
    out = fn(**kw)
    dt = time.perf_counter() - t0
    return out, dt
