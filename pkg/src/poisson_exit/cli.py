"""Command-line interface: eval, verify, check, table and info."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, ExitError, NumericFailure, UnknownIdentity
from .exit_identities import IDENTITIES, ExitQuery, evaluate
from .levy_model import LevyModel, load_model, psi_prime, roots

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FAIL = 0, 1, 2, 3
Z_PASS = 4.0
BUILTIN_MODELS = {
    "m1": LevyModel.cramer_lundberg(1.2, 1.0, 1.0),
    "m2": LevyModel.brownian(1.0, 2.0),
}
QUERY_FIELDS = ("x", "a", "theta", "vartheta", "y", "q", "lam")


class UsageError(Exception):
    pass


def real(text: str) -> float:
    """Float parser accepting the literal 'inf'."""
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v):
        raise argparse.ArgumentTypeError("nan is not allowed")
    return v


def seed64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


@dataclass
class RunConfig:
    command: str
    model_path: str | None = None
    identity: str | None = None
    params: dict = field(default_factory=dict)
    paths: int = 10**6
    seed: int = 1
    horizon: float | None = None
    step: float | None = None
    workers: int | None = None
    out: str | None = None
    sweep: str | None = None
    values: tuple[float, ...] = ()
    list_identities: bool = False

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        params = {k: getattr(ns, k) for k in QUERY_FIELDS if getattr(ns, k, None) is not None}
        if getattr(ns, "one_sided", False):
            params["two_sided"] = False
        cfg = cls(command=ns.command, model_path=ns.model, identity=getattr(ns, "identity", None),
                  params=params, paths=getattr(ns, "paths", 10**6), seed=getattr(ns, "seed", 1),
                  horizon=getattr(ns, "horizon", None), step=getattr(ns, "step", None),
                  workers=getattr(ns, "workers", None), out=getattr(ns, "out", None),
                  sweep=getattr(ns, "sweep", None), list_identities=getattr(ns, "list", False))
        if cfg.command == "table":
            cfg.values = _sweep_values(ns)
        cfg.validate()
        return cfg

    def validate(self):
        if self.command in ("eval", "verify", "table"):
            if not self.identity:
                raise UsageError(f"{self.command} needs --identity")
            if self.identity not in IDENTITIES:
                raise UsageError(f"unknown identity {self.identity!r}; choose from {', '.join(IDENTITIES)}")
        if self.command == "verify" and self.paths < 1000:
            raise UsageError("--paths must be at least 1000")
        if self.command == "table":
            if self.sweep not in QUERY_FIELDS:
                raise UsageError(f"--sweep must be one of {', '.join(QUERY_FIELDS)}")
            if not self.values:
                raise UsageError("table needs --values or --range")

    def query(self, **override) -> ExitQuery:
        try:
            return ExitQuery(self.identity, **{**self.params, **override})
        except (DomainError, UnknownIdentity) as exc:
            raise UsageError(str(exc)) from None


def _sweep_values(ns) -> tuple[float, ...]:
    if ns.values:
        return tuple(real(v) for v in ns.values.split(","))
    if ns.range:
        try:
            lo, hi, n = ns.range.split(":")
            return tuple(float(v) for v in np.linspace(float(lo), float(hi), int(n)))
        except ValueError:
            raise UsageError("--range must look like start:stop:count") from None
    return ()


def resolve_model(spec: str | None) -> LevyModel:
    if spec is None:
        raise UsageError("--model is required")
    if spec.lower() in BUILTIN_MODELS and not Path(spec).exists():
        return BUILTIN_MODELS[spec.lower()]
    try:
        return load_model(spec)
    except FileNotFoundError:
        raise UsageError(f"model file not found: {spec}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad model file {spec}: {exc}") from None


def fmt(v: float) -> str:
    return repr(float(v))


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


# -- commands -----------------------------------------------------------------


def cmd_eval(cfg: RunConfig, model: LevyModel) -> int:
    value = evaluate(model, cfg.query())
    print(fmt(value))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, model: LevyModel) -> int:
    from .simulator import estimate, mc_target

    qy = cfg.query()
    exact = mc_target(evaluate(model, qy), qy)
    est = estimate(model, qy, cfg.paths, cfg.seed, workers=cfg.workers, horizon=cfg.horizon, step=cfg.step)
    z = est.z_score(exact)
    ok = abs(z) <= Z_PASS
    print(f"identity   {qy.identity}")
    print(f"formula    {fmt(exact)}")
    print(f"mc_mean    {fmt(est.mean)}")
    print(f"std_error  {fmt(est.std_error)}")
    print(f"paths      {est.n_paths}")
    print(f"z          {z:+.4f}")
    print(f"truncated  {est.truncated_fraction!r}")
    if est.bias_warning:
        print("warning    truncated fraction above 1e-4 at q = 0; estimate may be biased")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check(cfg: RunConfig, model: LevyModel) -> int:
    from .scale_functions import ScaleContext
    from .verification import (check_laplace_transform, default_limit_suite, reports_to_csv,
                               run_suite)

    reports = list(run_suite(model))
    for q in (0.0, 0.05):
        if q == 0.0 and model.mean == 0.0:
            continue
        ctx = ScaleContext(model, q)
        for d in (0.5, 2.0):
            reports.append(check_laplace_transform(ctx, ctx.phi + d))
    reports += default_limit_suite(model)
    if cfg.out:
        with _output(cfg.out) as fh:
            reports_to_csv(reports, fh)
    n_fail = sum(not r.passed for r in reports)
    kinds: dict[str, list[bool]] = {}
    for r in reports:
        kinds.setdefault(r.check_id, []).append(r.passed)
    for k, flags in kinds.items():
        print(f"{k:32s} {sum(flags):4d}/{len(flags):<4d} {'PASS' if all(flags) else 'FAIL'}")
    worst = max((r.rel_err for r in reports if not r.check_id.startswith("limit")), default=0.0)
    print(f"max_rel_err {worst:.3e}")
    print("PASS" if n_fail == 0 else f"FAIL ({n_fail} checks)")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def cmd_table(cfg: RunConfig, model: LevyModel) -> int:
    base = cfg.query()
    fixed = {k: v for k, v in base.as_dict().items() if k not in ("identity", cfg.sweep)}
    rows = [(v, evaluate(model, cfg.query(**{cfg.sweep: v}))) for v in cfg.values]
    with _output(cfg.out) as fh:
        fh.write(f"# identity={base.identity} " + " ".join(f"{k}={v}" for k, v in fixed.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([cfg.sweep, "value"])
        for v, val in rows:
            w.writerow([fmt(v), fmt(val)])
    return EXIT_OK


def cmd_info(cfg: RunConfig, model: LevyModel | None) -> int:
    if cfg.list_identities:
        for name, (_, args) in IDENTITIES.items():
            print(f"{name:36s} {' '.join(args)}")
        return EXIT_OK
    q = cfg.params.get("q", 0.0)
    rs = roots(model, q)
    print(f"psi_prime_0 {fmt(psi_prime(model, 0.0))}")
    print(f"q           {fmt(q)}")
    print(f"Phi_q       {fmt(rs.phi)}")
    print("k  root  residue")
    for k, (z, r) in enumerate(zip(rs.roots, rs.residues)):
        print(f"{k}  {fmt(z)}  {fmt(r)}")
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "check": cmd_check, "table": cmd_table, "info": cmd_info}


def _add_query_flags(p: argparse.ArgumentParser):
    p.add_argument("--identity", help="identity name (see `info --list`)")
    p.add_argument("--x", type=real)
    p.add_argument("--a", type=real, help="upper barrier; 'inf' for none")
    p.add_argument("--theta", type=real)
    p.add_argument("--vartheta", type=real)
    p.add_argument("--y", type=real)
    p.add_argument("--q", type=real)
    p.add_argument("--lambda", dest="lam", type=real, help="observation rate; 'inf' for continuous")
    p.add_argument("--one-sided", action="store_true", help="up_prob_continuous without the lower barrier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poisson-exit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"poisson-exit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("eval", "evaluate an identity"), ("verify", "compare an identity with Monte Carlo"),
                           ("check", "run the quadrature identity checks"),
                           ("table", "sweep one parameter and write CSV"),
                           ("info", "print roots and residues of psi - q")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--model", help="model JSON file, or m1 / m2")
        if name in ("eval", "verify", "table"):
            _add_query_flags(p)
        if name == "info":
            p.add_argument("--q", type=real)
            p.add_argument("--list", action="store_true", help="list identity names and exit")
        if name == "verify":
            p.add_argument("--paths", type=int, default=10**6)
            p.add_argument("--seed", type=seed64, default=1)
            p.add_argument("--horizon", type=real)
            p.add_argument("--step", type=real, help="substep for sigma2 > 0 paths")
            p.add_argument("--workers", type=int)
        if name == "table":
            p.add_argument("--sweep", required=True, help="parameter to sweep")
            g = p.add_mutually_exclusive_group(required=True)
            g.add_argument("--values", help="comma-separated values")
            g.add_argument("--range", help="start:stop:count (inclusive linspace)")
        if name in ("check", "table"):
            p.add_argument("--out", help="CSV output file (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if ns.command != "table" or getattr(ns, "out", None):
        print(f"poisson-exit {__version__}")
    try:
        cfg = RunConfig.from_args(ns)
        model = None if cfg.list_identities else resolve_model(cfg.model_path)
    except (UsageError, DomainError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.command](cfg, model)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, DomainError, ArithmeticError, ExitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
