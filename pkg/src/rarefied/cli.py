"""Command-line front end: ``rarefied eval|verify|lattice|report ...``.

Reports are JSON lines: one object per record followed by a summary object.
Floats are written with 17 significant digits; ``wall_time`` fields are the
only run-dependent content.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import yaml

GROUPS = {
    "eval": ["gamma", "theta", "v"],
    "verify": ["beta-integral", "bailey-pair", "str", "minv", "e7", "coxeter", "rmatrix", "ybe"],
    "lattice": ["str", "partition"],
    "report": ["diff"],
}
TIMING_KEYS = {"wall_time"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    group: str = ""
    command: str = ""
    r: int | None = None
    mu: float = 0.0
    p: complex | None = None
    q: complex | None = None
    tau: complex | None = None
    sigma: complex | None = None
    nodes: int | None = None
    tolerance: float | None = None
    seed: int = 0x5EED
    count: int | None = None
    normalization: str = "additive"
    u: complex | None = None
    m: float = 0.0
    z: complex | None = None
    kind: str = "periodic"
    alpha: float | None = None
    output: str | None = None
    quiet: bool = False
    threads: int | None = None
    files: list = field(default_factory=list)

    @property
    def two_mu(self) -> int:
        return int(round(2 * self.mu))

    @property
    def two_m(self) -> int:
        return int(round(2 * self.m))


def parse_complex(text) -> complex:
    """``0.1+0.05i``, ``0.1+0.05j`` or a plain real number."""
    if isinstance(text, (int, float, complex)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_int(text) -> int:
    if isinstance(text, int):
        return text
    return int(str(text), 0)


CONVERT = {"r": parse_int, "seed": parse_int, "nodes": parse_int, "count": parse_int, "threads": parse_int,
           "mu": float, "m": float, "tolerance": float, "alpha": float,
           "p": parse_complex, "q": parse_complex, "tau": parse_complex, "sigma": parse_complex,
           "u": parse_complex, "z": parse_complex}


def _convert(name, value):
    if value is None or name not in CONVERT:
        return value
    try:
        return CONVERT[name](value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"field {name!r}: {exc}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags, then the thread/output environment."""
    values = {}
    if getattr(args, "config", None):
        try:
            data = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"config file {args.config!r}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        known = {f.name for f in fields(RunConfig)}
        for k, v in data.items():
            key = str(k).replace("-", "_")
            if key not in known:
                raise ConfigError(f"field {k!r}: unknown configuration key")
            values[key] = v
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None and v is not False and v != []:
            values[f.name] = v
    env_threads = os.environ.get("RAREFIED_THREADS")
    if env_threads and "threads" not in values:
        values["threads"] = env_threads
    cfg = RunConfig(**{k: _convert(k, v) for k, v in values.items()})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if cfg.group not in GROUPS or cfg.command not in GROUPS[cfg.group]:
        raise ConfigError(f"field 'command': unknown subcommand {cfg.group} {cfg.command}")
    if cfg.r is not None and cfg.r < 1:
        raise ConfigError("field 'r': must be a positive integer")
    if cfg.two_mu not in (0, 1) or abs(2 * cfg.mu - cfg.two_mu) > 1e-12:
        raise ConfigError("field 'mu': must be 0 or 0.5")
    if abs(2 * cfg.m - cfg.two_m) > 1e-12:
        raise ConfigError("field 'm': must be an integer or half-integer")
    for name in ("p", "q"):
        v = getattr(cfg, name)
        if v is not None and not 0 < abs(v) < 1:
            raise ConfigError(f"field {name!r}: nome modulus must lie in (0, 1)")
    for name in ("tau", "sigma"):
        v = getattr(cfg, name)
        if v is not None and not v.imag > 0:
            raise ConfigError(f"field {name!r}: needs a positive imaginary part")
    if (cfg.tau is None) != (cfg.sigma is None):
        raise ConfigError("field 'tau': tau and sigma must be given together")
    if cfg.tau is not None and cfg.p is not None:
        raise ConfigError("field 'p': give either nomes or tau/sigma, not both")
    if cfg.nodes is not None and (cfg.nodes < 2 or cfg.nodes % 2):
        raise ConfigError("field 'nodes': must be an even integer >= 2")
    if cfg.count is not None and cfg.count < 1:
        raise ConfigError("field 'count': must be positive")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError("field 'tolerance': must be positive")
    if cfg.threads is not None and cfg.threads < 1:
        raise ConfigError("field 'threads': must be positive")
    if cfg.normalization not in ("additive", "multiplicative"):
        raise ConfigError("field 'normalization': must be 'additive' or 'multiplicative'")
    if cfg.kind not in ("periodic", "norm", "plain"):
        raise ConfigError("field 'kind': must be periodic, norm or plain")
    if cfg.group == "report" and len(cfg.files) != 2:
        raise ConfigError("field 'files': report diff takes two report files")


def _nomes(cfg: RunConfig):
    import cmath
    if cfg.tau is not None:
        return cmath.exp(2j * math.pi * cfg.tau), cmath.exp(2j * math.pi * cfg.sigma)
    if cfg.p is None and cfg.q is None:
        return None
    p = cfg.p if cfg.p is not None else cfg.q
    q = cfg.q if cfg.q is not None else cfg.p
    return p, q


def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj) -> str:
    """JSON with 17-significant-digit floats and complex numbers as ``[re, im]``."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if hasattr(obj, "item") and getattr(obj, "shape", None) == ():
        obj = obj.item()
    if isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, complex):
        return f"[{_fmt(obj.real)}, {_fmt(obj.imag)}]"
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if hasattr(obj, "tolist"):
        return dumps(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return json.dumps(str(obj))


def record_from_residual(res, suite: str, wall_time: float) -> dict:
    from .suites import tag_for
    return {"type": "record", "suite": suite, "name": res.name, "tag": tag_for(res.name), "params": res.params,
            "lhs": res.lhs, "rhs": res.rhs, "residual": res.residual, "tolerance": res.tolerance,
            "n_nodes": res.n_nodes, "history": res.history, "passed": res.passed, "wall_time": wall_time}


def _eval_records(cfg: RunConfig) -> list[dict]:
    from .core import DEFAULT_POLICY, TruncationPolicy, theta, theta_series
    from .gamma import BaseParams, gamma_periodic, gamma_r, gamma_r_norm
    loose = TruncationPolicy(tol=1e-13)
    nomes = _nomes(cfg) or (0.15 * complex(math.cos(0.4), math.sin(0.4)), 0.2)
    r = cfg.r or 1
    if cfg.command == "gamma":
        params = BaseParams.from_nomes(r, *nomes)
        if cfg.kind == "periodic":
            arg = cfg.u if cfg.u is not None else 0.1 + 0.05j
            fn = lambda pol: gamma_periodic(arg, cfg.two_m, params, pol)
        else:
            arg = cfg.z if cfg.z is not None else 0.3 + 0.1j
            g = gamma_r_norm if cfg.kind == "norm" else gamma_r
            fn = lambda pol: g(arg, cfg.two_m, params, pol)
        value = complex(fn(DEFAULT_POLICY))
        err = abs(value - complex(fn(loose)))
        return [{"type": "eval", "name": f"gamma-{cfg.kind}", "args": {"arg": arg, "m": Fraction(cfg.two_m, 2),
                 "r": r, "p": params.p, "q": params.q}, "value": value, "error": err, "passed": math.isfinite(abs(value))}]
    if cfg.command == "theta":
        z = cfg.z if cfg.z is not None else 0.3 + 0.1j
        p = nomes[0]
        value = complex(theta(z, p))
        err = abs(value - complex(theta_series(z, p)))
        return [{"type": "eval", "name": "theta", "args": {"z": z, "p": p}, "value": value, "error": err,
                 "passed": math.isfinite(abs(value))}]
    from .vfunc import sample_vparams, v_function
    params = BaseParams.from_nomes(r, *nomes)
    vp = sample_vparams(params, cfg.two_mu, count=1, seed=cfg.seed)[0]
    res = v_function(vp)
    return [{"type": "eval", "name": "v-function", "args": {"t": list(vp.t), "two_n": list(vp.two_n), "r": r},
             "value": res.value, "error": res.error, "n_nodes": res.n_nodes, "passed": math.isfinite(abs(res.value))}]


def _suite_kwargs(cfg: RunConfig) -> dict:
    kw = {"seed": cfg.seed, "two_mu": cfg.two_mu}
    if cfg.r is not None:
        kw["r"] = cfg.r
    nomes = _nomes(cfg)
    if nomes is not None:
        kw["nomes"] = nomes
        kw["nome"] = nomes[0]
    if cfg.nodes is not None:
        kw["nodes"] = cfg.nodes
        kw["n_max"] = cfg.nodes
    if cfg.tolerance is not None:
        kw["tolerance"] = cfg.tolerance
    if cfg.count is not None:
        kw["count"] = cfg.count
    if cfg.alpha is not None:
        kw["alpha"] = cfg.alpha
    kw["normalization"] = cfg.normalization
    return kw


def run(cfg: RunConfig) -> list[dict]:
    """Execute the selected suite and return the report objects (records, then the summary)."""
    t0 = time.perf_counter()
    suite = f"{cfg.group} {cfg.command}"
    if cfg.group == "eval":
        records = _eval_records(cfg)
        for rec in records:
            rec["wall_time"] = time.perf_counter() - t0
    else:
        from .suites import SUITES
        records = []
        fn = SUITES[(cfg.group, cfg.command)]
        res_list = fn(**_suite_kwargs(cfg))
        dt = time.perf_counter() - t0
        for res in res_list:
            if cfg.tolerance is not None:
                res.tolerance = cfg.tolerance
            records.append(record_from_residual(res, suite, dt / max(len(res_list), 1)))
    failed = sum(1 for rec in records if not rec["passed"])
    conf = {k: v for k, v in asdict(cfg).items() if k not in ("output", "quiet", "files")}
    summary = {"type": "summary", "suite": suite, "records": len(records), "failed": failed,
               "passed": failed == 0, "config": conf, "wall_time": time.perf_counter() - t0}
    return records + [summary]


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def diff_reports(a: str, b: str) -> list[str]:
    """Differences between two report files, ignoring timing fields."""
    la = [strip_timing(json.loads(x)) for x in Path(a).read_text().splitlines() if x.strip()]
    lb = [strip_timing(json.loads(x)) for x in Path(b).read_text().splitlines() if x.strip()]
    out = []
    if len(la) != len(lb):
        out.append(f"line count {len(la)} != {len(lb)}")
    for i, (x, y) in enumerate(zip(la, lb)):
        if x != y:
            out.append(f"line {i + 1} differs")
    return out


def _output_path(cfg: RunConfig) -> Path | None:
    out_dir = os.environ.get("RAREFIED_OUTPUT_DIR")
    if cfg.output:
        path = Path(cfg.output)
        if out_dir and not path.is_absolute():
            path = Path(out_dir) / path
        return path
    if out_dir:
        return Path(out_dir) / f"{cfg.group}-{cfg.command}.jsonl"
    return None


def _set_threads(n: int | None):
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rarefied", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with RunConfig keys")
    common.add_argument("--r", type=str, help="rank r")
    common.add_argument("--mu", type=str, help="label class 0 or 0.5")
    common.add_argument("--p", type=str, help="nome p, e.g. 0.1+0.05i")
    common.add_argument("--q", type=str, help="nome q")
    common.add_argument("--tau", type=str, help="half-period tau (with --sigma)")
    common.add_argument("--sigma", type=str, help="half-period sigma")
    common.add_argument("--nodes", type=str, help="quadrature nodes")
    common.add_argument("--tolerance", type=str, help="pass threshold override")
    common.add_argument("--seed", type=str, help="sampler seed, e.g. 0x5EED")
    common.add_argument("--count", type=str, help="number of sampled parameter sets")
    common.add_argument("--normalization", choices=["additive", "multiplicative"])
    common.add_argument("--alpha", type=str, help="lattice rapidity")
    common.add_argument("--output", help="report file (relative to RAREFIED_OUTPUT_DIR if set)")
    common.add_argument("--quiet", action="store_true", help="print the summary only")
    common.add_argument("--threads", type=str, help="thread count")
    for group, cmds in GROUPS.items():
        gp = groups.add_parser(group)
        sub = gp.add_subparsers(dest="command", required=True)
        for cmd in cmds:
            sp = sub.add_parser(cmd, parents=[common])
            if group == "eval":
                sp.add_argument("--u", type=str, help="additive argument")
                sp.add_argument("--z", type=str, help="multiplicative argument")
                sp.add_argument("--m", type=str, help="discrete argument (integer or half-integer)")
                sp.add_argument("--kind", choices=["periodic", "norm", "plain"])
            if group == "report":
                sp.add_argument("files", nargs=2)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"rarefied: configuration error: {exc}", file=sys.stderr)
        return 2
    if cfg.group == "report":
        diffs = diff_reports(*cfg.files)
        for d in diffs:
            print(d)
        print(dumps({"type": "summary", "suite": "report diff", "identical": not diffs}))
        return 1 if diffs else 0
    _set_threads(cfg.threads)
    from .errors import RarefiedError
    try:
        objs = run(cfg)
    except (RarefiedError, ValueError) as exc:
        print(f"rarefied: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    lines = [dumps(o) for o in objs]
    path = _output_path(cfg)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    if cfg.quiet or path is not None:
        print(lines[-1])
    else:
        print("\n".join(lines))
    return 0 if objs[-1]["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
