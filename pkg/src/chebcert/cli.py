"""Command line interface: ``chebcert approx|certify|center|horner|bench``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .basis import BoxDomain, MonomialBasis, build_basis
from .center import CenterProblem, solve_center
from .certify import OPTIMAL, STRONGLY_UNIQUE, certify, kolmogorov_audit, subgradient_matrix
from .errors import ChebcertError, SchemaError
from .expr import parse_target
from .extrema import Signature
from .implicit import dextar_domain, dextar_target
from .minimax_lp import SampleGrid, discrete_minimax
from .oracle import find_extremes, perturbation_audit, write_error_grid
from .pipeline import SCHEMA_VERSION, SolveConfig, approximate
from .target import HornerTarget, SetValuedTarget, TabulatedTarget, airy_target, runge_target

EXIT_OK, EXIT_USAGE, EXIT_NOT_CERTIFIED, EXIT_FAILURE = 0, 2, 3, 4


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _counts(text: str) -> tuple:
    try:
        c = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    if any(v < 2 for v in c):
        raise argparse.ArgumentTypeError("grid needs at least 2 samples per axis")
    return c


def parse_domain(text: str, m: int) -> BoxDomain:
    """``lo,hi`` for every axis, or ``lo1,hi1;lo2,hi2;...`` per axis."""
    try:
        pairs = [tuple(float(v) for v in part.split(",")) for part in text.split(";")]
    except ValueError:
        raise SchemaError(f"bad domain {text!r}")
    if any(len(p) != 2 for p in pairs):
        raise SchemaError(f"bad domain {text!r}")
    if len(pairs) == 1:
        pairs = pairs * m
    if len(pairs) != m:
        raise SchemaError(f"domain has {len(pairs)} axes, expected {m}")
    lo, hi = zip(*pairs)
    try:
        return BoxDomain(np.array(lo), np.array(hi))
    except ValueError as exc:
        raise SchemaError(str(exc))


def resolve_target(name: str, m=None):
    """Target object and its default domain (None when the caller must supply one)."""
    if name.startswith("runge:"):
        mm = int(name.split(":", 1)[1])
        return runge_target(mm), BoxDomain.unit(mm)
    if name.startswith("dextar:"):
        out = int(name.split(":", 1)[1])
        if out not in (1, 2):
            raise SchemaError("dextar output must be 1 or 2")
        return dextar_target(out), dextar_domain()
    if name == "airy":
        return airy_target(), BoxDomain.interval(*bench.AIRY_DOMAIN)
    if name.endswith(".csv") and os.path.exists(name):
        t = TabulatedTarget.from_csv(name)
        return t, BoxDomain(t.points.min(axis=0), t.points.max(axis=0))
    return parse_target(name, m or 1), None


def _setup(args):
    target, dom = resolve_target(args.target, args.m)
    m = getattr(target, "m", None) or args.m or 1
    if args.domain is not None:
        dom = parse_domain(args.domain, m)
    if dom is None:
        dom = BoxDomain(-np.ones(m), np.ones(m))
    return target, dom


def _config(args, default_grid=36) -> SolveConfig:
    return SolveConfig(grid=args.grid or (default_grid,), dual_tol=args.dual_tol, seed=args.seed,
                       oracle_per_dim=args.oracle_per_dim, sharpness_samples=args.sharpness)


def _exit_code(status: str, failure) -> int:
    if failure:
        return EXIT_FAILURE
    return EXIT_OK if status in (OPTIMAL, STRONGLY_UNIQUE) else EXIT_NOT_CERTIFIED


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_outputs(out, report: dict, target=None, basis=None, a=None, domain=None, signature=None,
                   newton=None):
    if out is None:
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    _write_json(d / "report.json", report)
    if signature is not None:
        _write_json(d / "signature.json", {"schema_version": SCHEMA_VERSION, "entries": signature.to_list()})
    if newton is not None:
        newton.write_trace(d / "newton_trace.jsonl")
    if target is not None and not isinstance(target, TabulatedTarget):
        write_error_grid(d / "error_grid.csv", target, basis, a, domain)


def _print_summary(row: dict):
    keys = ("deg", "n", "act", "ext", "zero", "discrete", "newton", "global", "status")
    print(" ".join(f"{k}={row[k]:.6f}" if isinstance(row[k], float) else f"{k}={row[k]}" for k in keys))


def _lp_only(target, basis, domain, args) -> int:
    lp = discrete_minimax(target, basis, SampleGrid(domain, (len(target.points),), target.points))
    report = {"schema_version": SCHEMA_VERSION, "target": args.target, "basis": basis.to_manifest(),
              "domain": domain.to_dict(), "lp": lp.to_dict(),
              "failure": "tabulated targets support the LP phase only"}
    print(f"discrete={lp.t:.6f} (LP phase only for tabulated targets)")
    _write_outputs(args.out, report)
    return EXIT_FAILURE


def cmd_approx(args) -> int:
    target, domain = _setup(args)
    basis = build_basis(domain.m, args.degree)
    if isinstance(target, TabulatedTarget):
        return _lp_only(target, basis, domain, args)
    res = approximate(target, basis, domain, _config(args))
    report = res.to_dict()
    report["target"] = args.target
    report["seed"] = args.seed
    _print_summary(report["summary"])
    if res.failure:
        print(f"failure: {res.failure}", file=sys.stderr)
    _write_outputs(args.out, report, target, basis, res.a, domain, res.signature, res.newton)
    return _exit_code(report["summary"]["status"], res.failure)


def load_candidate(path) -> tuple[MonomialBasis, np.ndarray, dict]:
    try:
        data = json.loads(Path(path).read_text())
        basis = MonomialBasis.from_manifest(data["basis"])
        a = np.asarray(data["a"], dtype=float).reshape(-1)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise SchemaError(f"cannot read candidate {path}: {exc}")
    if a.size != basis.n:
        raise SchemaError(f"candidate has {a.size} coefficients but the basis has {basis.n}")
    return basis, a, data


def certify_candidate(target, basis, a, domain, *, trials: int = 200, seed: int = 0) -> dict:
    """Polish extremes from dense seeds, certify, then audit."""
    ext = find_extremes(target, basis, a, domain)
    sig = Signature.from_extremes(ext)
    cert = certify(subgradient_matrix(sig, basis), sharpness_samples=10_000, seed=seed)
    out = {"signature": sig.to_list(), "certificate": cert.to_dict(), "norm": sig.norm_value}
    if cert.is_optimal:
        audit = perturbation_audit(target, basis, a, cert, domain, trials=trials, seed=seed)
        out["perturbation_audit"] = {"status": audit.status, "trials": audit.trials,
                                     "min_margin": audit.min_value}
    else:
        kol = kolmogorov_audit(sig, basis, trials=2000, seed=seed)
        out["descent_witness"] = None if kol.witness is None else kol.witness.tolist()
        out["descent_value"] = kol.min_value
    return out, sig, cert


def cmd_certify(args) -> int:
    basis, a, data = load_candidate(args.candidate)
    target, domain = _setup(args)
    if "domain" in data and args.domain is None:
        domain = BoxDomain(np.array(data["domain"]["lower"]), np.array(data["domain"]["upper"]))
    if basis.m != domain.m:
        raise SchemaError(f"basis is {basis.m}-variate but the domain has {domain.m} axes")
    body, sig, cert = certify_candidate(target, basis, a, domain, seed=args.seed)
    report = {"schema_version": SCHEMA_VERSION, "target": args.target, "basis": basis.to_manifest(),
              "domain": domain.to_dict(), "a": a.tolist(), **body}
    print(f"status={cert.status} extremes={len(sig)} norm={sig.norm_value:.6g}")
    _write_outputs(args.out, report, target, basis, a, domain, sig)
    return _exit_code(cert.status, None)


def cmd_center(args) -> int:
    m = args.m or 1
    fm, fp = parse_target(args.fminus, m), parse_target(args.fplus, m)
    domain = parse_domain(args.domain, m) if args.domain else BoxDomain(-np.ones(m), np.ones(m))
    basis = build_basis(m, args.degree)
    problem = CenterProblem(SetValuedTarget(fm, fp, name=f"[{args.fminus}, {args.fplus}]"), basis, domain)
    res = solve_center(problem, _config(args, default_grid=201))
    report = res.to_dict()
    report["target"] = {"f_minus": args.fminus, "f_plus": args.fplus}
    _print_summary(report["summary"])
    print(f"a={np.round(res.a, 10).tolist()} error={res.error:.10g} branch={res.branch}")
    _write_outputs(args.out, report, problem.target, basis, res.a, domain, res.signature, res.run.newton)
    return _exit_code(report["summary"]["status"], res.run.failure)


def cmd_horner(args) -> int:
    base, domain = _setup(args)
    if domain.m != 1:
        raise SchemaError("the Horner error model is univariate")
    target = HornerTarget(base, args.u)
    basis = build_basis(1, args.degree)
    res = approximate(target, basis, domain, _config(args, default_grid=201))
    report = res.to_dict()
    report["target"] = args.target
    report["u"] = args.u
    _print_summary(report["summary"])
    if res.failure:
        print(f"failure: {res.failure}", file=sys.stderr)
    _write_outputs(args.out, report, target, basis, res.a, domain, None, res.newton)
    return _exit_code(report["summary"]["status"], res.failure)


def cmd_bench(args) -> int:
    ms = [int(v) for v in args.runge_m.split(",")] if args.runge_m else None
    rows = bench.run_suite(args.suite, jobs=args.jobs, ms=ms)
    print(bench.format_rows(rows))
    if args.out is not None:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        _write_json(d / "report.json", {"schema_version": SCHEMA_VERSION, "suite": args.suite,
                                        "rows": [r.to_dict() for r in rows]})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for report.json and companion files")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="parallel instances (bench)")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--m", type=int, help="input dimension for expression targets")
    solve.add_argument("--degree", type=_nonneg_int, required=True)
    solve.add_argument("--domain", help="lo,hi or lo1,hi1;lo2,hi2;...")
    solve.add_argument("--grid", type=_counts, help="samples per axis, e.g. 36 or 20,30")
    solve.add_argument("--dual-tol", type=float, default=1e-8)
    solve.add_argument("--oracle-per-dim", type=int, default=None)
    solve.add_argument("--sharpness", type=int, default=0, help="directions sampled for r-hat")

    p = argparse.ArgumentParser(prog="chebcert", description="Best uniform polynomial approximation with certificates.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("approx", parents=[common, solve], help="solve and certify")
    a.add_argument("--target", required=True, help="runge:<m>, dextar:<1|2>, airy, file.csv or an expression")
    a.set_defaults(func=cmd_approx)

    c = sub.add_parser("certify", parents=[common], help="certify given coefficients")
    c.add_argument("candidate", help="JSON with basis manifest and coefficients a")
    c.add_argument("--target", required=True)
    c.add_argument("--m", type=int)
    c.add_argument("--domain")
    c.set_defaults(func=cmd_certify)

    ce = sub.add_parser("center", parents=[common, solve], help="relative Chebyshev center of (f-, f+)")
    ce.add_argument("--fminus", required=True)
    ce.add_argument("--fplus", required=True)
    ce.set_defaults(func=cmd_center)

    h = sub.add_parser("horner", parents=[common, solve], help="approximation plus Horner evaluation error")
    h.add_argument("--target", default="airy")
    h.add_argument("--u", type=float, default=2.0**-53, help="unit roundoff")
    h.set_defaults(func=cmd_horner)

    b = sub.add_parser("bench", parents=[common], help="rerun reference experiments")
    b.add_argument("suite", choices=["runge", "dextar", "airy"])
    b.add_argument("--runge-m", help="comma separated dimensions for the runge suite")
    b.set_defaults(func=cmd_bench)
    return p


_VALUE_OPTS = ("--domain", "--target", "--fminus", "--fplus")


def _glue_values(argv):
    # "--domain -1,1" would otherwise read -1,1 as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_OPTS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChebcertError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
