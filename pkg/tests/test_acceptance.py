"""One test per acceptance criterion; each prints a single PASS/FAIL line before asserting."""
import re
import time

from rarefied import cli, suites
from rarefied.beta import sample_param_sets, verify_beta
from rarefied.identities import base_layer, gamma_network


def report(capsys, n, checks, elapsed, budget):
    ok = all(checks.values()) and elapsed < budget
    failed = [k for k, v in checks.items() if not v]
    if elapsed >= budget:
        failed.append(f"runtime {elapsed:.1f}s >= {budget}s")
    detail = "all checks" if ok else "failed: " + ", ".join(failed)
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} ({detail}; {elapsed:.1f}s)")
    return ok


def test_criterion_1_base_layer(capsys):
    t0 = time.perf_counter()
    res = base_layer(n_points=200)
    dt = time.perf_counter() - t0
    checks = {name: err < 1e-12 for name, err in res.items()}
    assert report(capsys, 1, checks, dt, 10), res


def test_criterion_2_gamma_network(capsys):
    t0 = time.perf_counter()
    checks = {}
    for r in (1, 2, 3):
        for name, err in gamma_network(r).items():
            checks[f"r={r} {name}"] = err < (1e-3 if name == "residue-limit" else 1e-10)
    dt = time.perf_counter() - t0
    assert report(capsys, 2, checks, dt, 30)


def test_criterion_3_beta_integral(capsys):
    t0 = time.perf_counter()
    checks = {}
    for r in (1, 2, 3):
        params = suites.base_params(r, suites.BETA_NOMES)
        for two_mu in (0, 1):
            sets = sample_param_sets(params, two_mu, count=20)
            add = [verify_beta(ps, normalization="additive", n_max=512) for ps in sets]
            mult = [verify_beta(ps, normalization="multiplicative", n_max=512) for ps in sets]
            key = f"r={r} mu={two_mu}/2"
            checks[key + " count"] = len(sets) == 20
            checks[key + " residual"] = all(x.residual < 1e-8 for x in add + mult)
            checks[key + " nodes"] = all(x.n_nodes <= 512 for x in add + mult)
            checks[key + " cross"] = all(abs(a.lhs / a.rhs - m.lhs / m.rhs) < 1e-10 for a, m in zip(add, mult))
    dt = time.perf_counter() - t0
    assert report(capsys, 3, checks, dt, 300)


def test_criterion_4_bailey_layer(capsys):
    t0 = time.perf_counter()
    pair, step = suites.bailey_pair(r=2)
    checks = {"pair at 6 points": pair.residual < 1e-8 and len(pair.lhs) == 6,
              "chain step": step.residual < 1e-7}
    for r, tol in ((1, 1e-6), (2, 1e-5)):
        for k, res in enumerate(suites.operator_str(r=r, nodes=64)):
            (n1, e1), (n2, e2) = res.history
            checks[f"str r={r} case {k}"] = n2 == 64 and e2 < tol
            checks[f"str r={r} case {k} decay"] = e2 < e1 / 10
    for r in (1, 2):
        minv, unit = suites.inversion(r=r)
        checks[f"minv r={r}"] = minv.residual < 1e-4
        checks[f"unit limit r={r}"] = all(abs(x - 0.5) < 0.1 for x in unit.rhs)
    dt = time.perf_counter() - t0
    assert report(capsys, 4, checks, dt, 600)


def test_criterion_5_e7(capsys):
    t0 = time.perf_counter()
    checks = {}
    flips = []
    for r in (1, 2, 3):
        for two_mu in (0, 1):
            for res in suites.e7(r=r, two_mu=two_mu):
                key = f"r={r} mu={two_mu}/2 flip={res.params['flip']}"
                checks[key] = checks.get(key, True) and res.residual < 1e-7
                checks[key + " involution"] = res.params["involution"]
                flips.append(res.params["flip"] and res.params["mapped_two_mu"] != res.params["two_mu"])
    checks["parity-flip case present"] = any(flips)
    dt = time.perf_counter() - t0
    assert report(capsys, 5, checks, dt, 300)


def test_criterion_6_lattice(capsys):
    t0 = time.perf_counter()
    limits = {"w-inversion": 1e-12, "str-functional": 1e-6, "str-normalized": 1e-6, "norm-equations": 1e-9,
              "positivity": 1e-10, "partition-order": 1e-10}
    checks = {}
    for r in (1, 2):
        for res in suites.lattice_str(r=r) + suites.lattice_partition(r=r):
            if res.name in limits:
                key = f"r={r} {res.name}"
                checks[key] = checks.get(key, True) and res.residual < limits[res.name]
    dt = time.perf_counter() - t0
    assert len(checks) == 12
    assert report(capsys, 6, checks, dt, 300)


def test_criterion_7_ybe(capsys):
    t0 = time.perf_counter()
    checks = {}
    for r in (1, 2):
        for res in suites.coxeter(r=r):
            if res.name in ("coxeter-quadratic-S2", "coxeter-quadratic-S4"):
                checks[f"r={r} {res.name}"] = res.residual < 1e-12
            elif "braid" in res.name:
                checks[f"r={r} {res.name}"] = res.residual < 1e-5
            else:
                checks[f"r={r} {res.name}"] = res.passed
        for res in suites.rmatrix(r=r):
            if res.name == "r-explicit":
                checks[f"r={r} explicit R"] = res.residual < 1e-6
            elif res.name == "unitarity":
                checks[f"r={r} unitarity"] = res.residual < 1e-5
            else:
                checks[f"r={r} {res.name}"] = res.passed
        (res,) = suites.ybe(r=r)
        (n1, e1), (n2, e2) = res.history
        checks[f"r={r} ybe"] = n1 == (24 if r == 1 else 16) and e1 < (1e-4 if r == 1 else 1e-3)
        checks[f"r={r} ybe refines"] = e2 < e1
    dt = time.perf_counter() - t0
    assert report(capsys, 7, checks, dt, 1800)


TIMING = re.compile(r'"wall_time": [^,}]+')


DETERMINISM_RUNS = (["verify", "e7", "--r", "2", "--count", "1"], ["lattice", "partition", "--r", "2"])


def test_criterion_8_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    checks = {}
    for k, argv in enumerate(DETERMINISM_RUNS):
        a, b = tmp_path / f"{k}a.jsonl", tmp_path / f"{k}b.jsonl"
        codes = [cli.main(argv + ["--output", str(a)]), cli.main(argv + ["--output", str(b)])]
        ta, tb = (TIMING.sub('"wall_time": 0', x.read_text()) for x in (a, b))
        diff_code = cli.main(["report", "diff", str(a), str(b)])
        capsys.readouterr()
        name = " ".join(argv[:2])
        checks[f"{name} runs succeed"] = codes == [0, 0]
        checks[f"{name} byte-identical"] = ta.encode() == tb.encode()
        checks[f"{name} report diff"] = diff_code == 0
    dt = time.perf_counter() - t0
    assert report(capsys, 8, checks, dt, 600)
