"""Command-line front end: ``slrf <subcommand> ...``.

Every subcommand writes a machine-readable artifact and exits 0 only when its
own success criterion held (a converged solve, a passing property check, ...).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import jsonschema
import numpy as np

from . import __version__
from .eigensolver import EigConfig, SubspaceCollapse, solve_eigs
from .experiments import alpha_sweep, check_props, filter_economics, write_sweep_csv
from .filters import (KINDS, compare_filters, design_filter, read_filter_json,
                      write_filter_curve, write_filter_json)
from .krylov import KrylovConfig
from .mmio import write_matrix_market, write_vector
from .problems import FAMILIES, ProblemSpec, make_problem, reference_eigenvalues

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT1 = {"type": "integer", "minimum": 1}

PROBLEM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "n": _INT1, "nx": _INT1, "ny": _INT1,
        "seed": {"type": "integer"},
        "zero_fraction": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "eigs": {"type": "array", "items": _POS, "minItems": 1},
        "a_path": {"type": "string"}, "b_path": {"type": "string"},
    },
}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunConfig",
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "gamma", "eig"],
    "properties": {
        "problem": PROBLEM_SCHEMA,
        "gamma": _POS,
        "filter": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(KINDS)},
                "n_poles": _INT1,
                "alpha": _POS,
                "beta": {"type": "number", "minimum": 0},
            },
        },
        "eig": {
            "type": "object",
            "additionalProperties": False,
            "required": ["nev"],
            "properties": {
                "nev": _INT1,
                "subspace_factor": {"type": "number", "minimum": 1},
                "tol": _POS,
                "max_outer": _INT1,
                "seed": {"type": "integer"},
                "droptol": {"type": "number", "minimum": 0},
                "inner": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rel_tol": _POS, "max_iter": _INT1,
                        "stagnation_window": _INT1, "seed": {"type": ["integer", "null"]},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "vectors": {"type": "string"}},
        },
    },
}


class UsageError(Exception):
    pass


def validate_run_config(cfg):
    """Raise :class:`UsageError` unless ``cfg`` matches :data:`RUN_SCHEMA`."""
    try:
        jsonschema.validate(cfg, RUN_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise UsageError(f"invalid run config at {where}: {e.message}") from None
    return cfg


# -- argument helpers ----------------------------------------------------------

def _scalar(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_problem(text):
    """``family:key=value,...`` or a JSON file path -> problem dict.

    ``diag`` takes ``eigs=1;10;100``.
    """
    if text.endswith(".json") and os.path.exists(text):
        with open(text) as fh:
            d = json.load(fh)
        d = d.get("spec", d)
    else:
        family, _, rest = text.partition(":")
        d = {"family": family}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"malformed problem option {item!r}")
            if key == "eigs":
                d[key] = [float(v) for v in val.split(";") if v]
            else:
                d[key] = _scalar(val)
    try:
        jsonschema.validate(d, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as e:
        raise UsageError(f"invalid problem {text!r}: {e.message}") from None
    return d


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _droptol_list(text):
    out = []
    for v in text.split(","):
        v = v.strip()
        out.append(None if v.lower() in ("none", "off") else float(v))
    return out


def _kind(text):
    k = text.replace("-", "_").lower()
    if k not in KINDS:
        raise argparse.ArgumentTypeError(f"kind must be one of {', '.join(KINDS)}")
    return k


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _gamma_from(args, problem):
    """``--gamma`` or, with ``--count K`` on an analytic family, the midpoint of lam_K, lam_{K+1}."""
    if args.gamma is not None:
        return args.gamma
    if getattr(args, "count", None):
        ref = reference_eigenvalues(problem)
        if ref is None or ref.size <= args.count:
            raise UsageError("--count needs an analytic family with more than K eigenvalues")
        lo, hi = ref[args.count - 1], ref[args.count]
        if lo == hi:
            raise UsageError(f"eigenvalue {args.count} is repeated; pick another --count")
        return float(0.5 * (lo + hi))
    raise UsageError("--gamma is required")


def _log(msg):
    print(msg, file=sys.stderr)


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args):
    spec = parse_problem(args.problem)
    pencil = make_problem(spec)
    out = _outdir(args.out)
    write_matrix_market(pencil.A, os.path.join(out, "A.mtx"), symmetric=True)
    write_matrix_market(pencil.B, os.path.join(out, "B.mtx"), symmetric=True)
    ref = reference_eigenvalues(spec)
    side = {
        "spec": ProblemSpec(**spec).to_dict(),
        "n": pencil.n,
        "nnz": {"A": pencil.A.nnz, "B": pencil.B.nnz},
        "b_definite": pencil.b_definite,
        "files": {"A": "A.mtx", "B": "B.mtx"},
        "reference_eigenvalues": None if ref is None else [float(v) for v in ref],
    }
    _dump(side, os.path.join(out, "problem.json"))
    print(f"wrote {pencil.n}x{pencil.n} pencil to {out}")
    return EXIT_OK


def _build_filter(args, gamma):
    if args.n_poles < 1:
        raise UsageError("-N must be >= 1")
    if args.kind == "slrf" and not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    if args.kind == "slrf" and args.beta < 0:
        raise UsageError("--beta must be >= 0")
    if not gamma > 0:
        raise UsageError("--gamma must be positive")
    return design_filter(args.kind, gamma, args.n_poles, alpha=args.alpha, beta=args.beta)


def cmd_design(args):
    if args.gamma is None:
        raise UsageError("--gamma is required")
    F = _build_filter(args, args.gamma)
    out = _outdir(args.out)
    write_filter_json(F, os.path.join(out, "filter.json"))
    write_filter_curve(F, os.path.join(out, "filter-curve.csv"))
    if F.design_warning:
        _log(f"warning: {F.design_warning}")
    print(f"separation factor |phi'(gamma)| = {F.separation_factor:.6g}")
    return EXIT_OK


def cmd_plot(args):
    if args.filter:
        F = read_filter_json(args.filter)
    else:
        if args.gamma is None:
            raise UsageError("give --filter FILE or design flags with --gamma")
        F = _build_filter(args, args.gamma)
    lo = -F.gamma if args.xmin is None else args.xmin
    hi = 2 * F.gamma if args.xmax is None else args.xmax
    if not hi > lo or args.points < 2:
        raise UsageError("need xmax > xmin and --points >= 2")
    path = args.out if args.out.endswith(".csv") else os.path.join(_outdir(args.out),
                                                                    "filter-curve.csv")
    write_filter_curve(F, path, np.linspace(lo, hi, args.points))
    print(f"wrote {args.points} samples to {path}")
    return EXIT_OK


def run_config_from_args(args):
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read run config {args.config!r}: {e}") from None
        return validate_run_config(cfg)
    if not args.problem:
        raise UsageError("--problem or --config is required")
    problem = parse_problem(args.problem)
    if args.nev is None:
        raise UsageError("--nev is required")
    cfg = {
        "problem": problem,
        "gamma": _gamma_from(args, problem),
        "filter": {"kind": args.kind, "n_poles": args.n_poles, "alpha": args.alpha,
                   "beta": args.beta},
        "eig": {"nev": args.nev, "tol": args.tol, "seed": args.seed,
                "droptol": args.droptol, "max_outer": args.max_outer,
                "inner": {"max_iter": args.max_inner}},
        "output": {"report": os.path.join(args.out, "eig-report.json")},
    }
    if args.dump_vectors:
        cfg["output"]["vectors"] = os.path.join(args.out, "eigenvectors.mtx")
    return validate_run_config(cfg)


def _eig_config(cfg):
    e = dict(cfg["eig"])
    inner = KrylovConfig(**e.pop("inner", {}))
    return EigConfig(gamma=cfg["gamma"], inner=inner, **e)


def cmd_solve(args):
    cfg = run_config_from_args(args)
    pencil = make_problem(cfg["problem"])
    f = {"kind": "slrf", "n_poles": 4, "alpha": 1.0, "beta": 0.01, **cfg.get("filter", {})}
    F = design_filter(f["kind"], cfg["gamma"], f["n_poles"], alpha=f["alpha"], beta=f["beta"])
    ec = _eig_config(cfg)
    out = cfg.get("output", {})
    report_path = out.get("report", os.path.join(args.out, "eig-report.json"))
    os.makedirs(os.path.dirname(report_path) or ".", exist_ok=True)
    t0 = time.perf_counter()
    try:
        rep = solve_eigs(pencil, F, ec)
    except SubspaceCollapse as e:
        _dump({"converged": False, "error": str(e)}, report_path)
        _log(f"error: {e}")
        return EXIT_FAIL
    rep.write_json(report_path)
    if "vectors" in out:
        write_vector(rep.X[:, rep.inside], out["vectors"])
    _log(f"elapsed {time.perf_counter() - t0:.2f}s")
    print(f"converged={rep.converged} inside={rep.inside_count} iter={rep.outer_iters} "
          f"spMV={rep.spmv_solver} spMV_avg={rep.spmv_avg:.1f}")
    for note in rep.notes:
        _log(f"note: {note}")
    return EXIT_OK if rep.converged else EXIT_FAIL


def cmd_alpha_sweep(args):
    problem = parse_problem(args.problem)
    pencil = make_problem(problem)
    if args.mu is not None:
        mu = args.mu
    else:
        ref = reference_eigenvalues(problem)
        if ref is None:
            raise UsageError("--mu is required for families without an analytic spectrum")
        mu = float(ref[0] * (1.0 - args.gap))
    cfg = KrylovConfig(rel_tol=args.tol, max_iter=args.max_inner)
    rows = alpha_sweep(pencil, mu, args.alpha, _droptol_list(args.droptol), cfg)
    path = args.out if args.out.endswith(".csv") else os.path.join(_outdir(args.out),
                                                                    "alpha-sweep.csv")
    write_sweep_csv(rows, path)
    for r in rows:
        print(",".join(r.as_csv()))
    return EXIT_OK


def cmd_compare_filters(args):
    problem = parse_problem(args.problem)
    pencil = make_problem(problem)
    gamma = _gamma_from(args, problem)
    if args.nev is None:
        raise UsageError("--nev is required")
    eig_kw = {"tol": args.tol, "seed": args.seed, "droptol": args.droptol,
              "max_outer": args.max_outer, "inner": KrylovConfig(max_iter=args.max_inner)}
    reps = filter_economics(pencil, gamma, args.nev, n_poles=args.n_poles, alpha=args.alpha,
                            beta=args.beta, eig_kw=eig_kw)
    quality = compare_filters([r.filter for r in reps.values()], gamma)
    table = {}
    for kind, r in reps.items():
        table[kind] = {
            "converged": r.converged, "outer_iters": r.outer_iters, "spmv": r.spmv_solver,
            "spmv_avg": r.spmv_avg, "separation_factor": r.filter.separation_factor,
            "per_pole_avg_half_iters": [p.avg_half_iters for p in r.per_pole_stats],
        }
    out = _outdir(args.out)
    _dump({"gamma": gamma, "nev": args.nev, "filters": table, "quality": quality},
          os.path.join(out, "compare-filters.json"))
    print(f"{'filter':18s} {'conv':>5s} {'Iter':>5s} {'spMV':>8s} {'spMV_avg':>9s}")
    for kind, row in table.items():
        print(f"{kind:18s} {str(row['converged']):>5s} {row['outer_iters']:5d} "
              f"{row['spmv']:8d} {row['spmv_avg']:9.1f}")
    return EXIT_OK if all(r["converged"] for r in table.values()) else EXIT_FAIL


def cmd_check_props(args):
    problem = parse_problem(args.problem)
    pencil = make_problem(problem)
    if pencil.n > 2000:
        raise UsageError("check-props is dense; use n <= 2000")
    ref = reference_eigenvalues(problem)
    if args.mu is not None:
        mu = args.mu
    elif ref is not None:
        mu = float(ref[0] * (1.0 - args.gap))
    else:
        raise UsageError("--mu is required for families without an analytic spectrum")
    rtol = args.rtol if args.rtol is not None else (1e-8 if problem["family"] == "diag" else 1e-6)
    res = check_props(pencil, mu, args.alpha, eigs=ref, rtol=rtol)
    path = args.out if args.out.endswith(".json") else os.path.join(_outdir(args.out),
                                                                     "check-props.json")
    _dump(res.to_dict(), path)
    print(f"{'alpha':>6s} {'kC closed':>14s} {'kC numeric':>14s} {'kS numeric':>14s}")
    for a, c, n_, s in zip(res.alphas, res.kappa_c_closed, res.kappa_c_numeric,
                           res.kappa_s_numeric):
        print(f"{a:6g} {c:14.8g} {n_:14.8g} {s:14.8g}")
    print(f"agree={res.agree} (max rel err {res.max_rel_err:.2e}) "
          f"kC_monotone={res.c_monotone} kS_decreasing={res.s_decreasing}")
    return EXIT_OK if res.ok else EXIT_FAIL


# -- parser ------------------------------------------------------------------------

def _filter_flags(p, gamma_required=False):
    p.add_argument("--kind", type=_kind, default="slrf")
    p.add_argument("-N", dest="n_poles", type=int, default=4, help="pole pairs")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--gamma", type=float, required=gamma_required)


def _eig_flags(p):
    p.add_argument("--count", type=int, help="place gamma between lam_K and lam_{K+1}")
    p.add_argument("--nev", type=int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--droptol", type=float, default=1e-4)
    p.add_argument("--max-inner", type=int, default=1000)
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="slrf", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a test pencil as Matrix Market files")
    p.add_argument("--problem", required=True, help="family:key=val,... or a JSON file")
    p.add_argument("--out", default="problem")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("design", help="design a filter; writes filter.json and filter-curve.csv")
    _filter_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("plot", help="sample a filter curve on a user grid (CSV only)")
    _filter_flags(p)
    p.add_argument("--filter", help="filter.json to sample instead of designing")
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--points", type=int, default=601)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("solve", help="filtered subspace iteration; writes eig-report.json")
    p.add_argument("--config", help="RunConfig JSON (overrides the flags)")
    p.add_argument("--problem")
    _filter_flags(p)
    _eig_flags(p)
    p.add_argument("--dump-vectors", action="store_true")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("alpha-sweep", help="inner-solve iterations versus alpha")
    p.add_argument("--problem", required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--gap", type=float, default=3e-4, help="mu = lam_1 (1 - gap) if --mu absent")
    p.add_argument("--alpha", type=_float_list, default=[0.0, 0.05, 0.5, 0.8, 1.0])
    p.add_argument("--droptol", default="none,1e-4", help="comma list; 'none' = unpreconditioned")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-inner", type=int, default=1000)
    p.add_argument("--out", default="alpha-sweep.csv")
    p.set_defaults(func=cmd_alpha_sweep)

    p = sub.add_parser("compare-filters", help="run all four filters on one problem")
    p.add_argument("--problem", required=True)
    _filter_flags(p)
    _eig_flags(p)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare_filters)

    p = sub.add_parser("check-props", help="closed-form vs numeric conditioning checks")
    p.add_argument("--problem", required=True)
    p.add_argument("--mu", type=float)
    p.add_argument("--gap", type=float, default=3e-4)
    p.add_argument("--alpha", type=_float_list, default=[0.0, 0.25, 0.5, 1.0, 2.0])
    p.add_argument("--rtol", type=float)
    p.add_argument("--out", default="check-props.json")
    p.set_defaults(func=cmd_check_props)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        ap.error(str(e))  # exits with status 2
    except (ValueError, OSError) as e:
        _log(f"error: {e}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
