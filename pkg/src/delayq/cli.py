"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from . import report
from .errors import ConfigError, DelayqError
from .expansion import expansion_coeffs, find_roots
from .model import ModelSpec, load_model
from .moment_engine import MomentTable, chi, chi_table
from .multi_index import MultiIndex, iterate_below
from .simulator import estimate_joint_moment, estimate_workload, simulate_paths
from .transient import bound_table, bound_transient, default_grid, solve_all
from .validation import run_validation
from .workload import workload_limits

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2


def _index(text: str, model: ModelSpec) -> MultiIndex:
    n = MultiIndex.parse(text)
    if len(n) != model.k:
        raise ConfigError(f"index {text!r} has {len(n)} entries but the model has k={model.k}")
    return n


def _emit(args, obj: dict, header: Sequence[str] | None = None, rows=None) -> None:
    fmt = args.format
    if fmt == "json" or header is None:
        text = report.to_json(obj)
    elif fmt == "csv":
        text = report.to_csv(header, rows)
    else:
        text = report.to_dat(header, rows)
    report.write_text(text, args.out)


def _index_columns(k: int) -> list[str]:
    return [f"n_{j + 1}" for j in range(k)]


def cmd_chi(args, model: ModelSpec) -> int:
    table = MomentTable(model)
    if args.all_upto is not None or args.below is not None:
        if args.below is not None:
            top = _index(args.below, model)
            entries = [(m, chi(m, table)) for m in iterate_below(top) + [top] if m.eta > 0]
        else:
            entries = chi_table(table, args.all_upto)
        obj = {"command": "chi", "rows": [{"n": list(n), "eta": n.eta, "chi": v} for n, v in entries]}
        header = _index_columns(model.k) + ["eta", "chi"]
        rows = [list(n) + [n.eta, v] for n, v in entries]
        if args.format == "json":
            _emit(args, obj)
        else:
            _emit(args, obj, header, rows)
        return EXIT_OK
    if args.n is None:
        raise ConfigError("chi needs --n, --all-upto or --below")
    n = _index(args.n, model)
    value = chi(n, table)
    obj = {"command": "chi", "n": list(n), "chi": value}
    _emit(args, obj, _index_columns(model.k) + ["eta", "chi"], [list(n) + [n.eta, value]])
    return EXIT_OK


def _grid(args, model: ModelSpec):
    return default_grid(model, args.h, args.tmax)


def cmd_transient(args, model: ModelSpec) -> int:
    n = _index(args.n, model)
    grid = _grid(args, model)
    richardson = not args.no_richardson
    m = solve_all(n, model, grid, richardson=richardson)[n]
    r_bound = bound_table(n, model)[n]
    try:
        hb = bound_transient(n, model, grid, variant=args.variant, richardson=richardson)
        h_values, role = hb.values, hb.role
    except DelayqError as exc:
        print(f"warning: no transient bound: {exc}", file=sys.stderr)
        h_values, role = np.full(grid.size, np.nan), "none"
    print(f"h column role: {role}", file=sys.stderr)
    idx = np.arange(0, grid.size, max(1, args.every))
    t = grid.t
    header = ["t", "M_tilde", "h_lower_or_upper", "R_bound"]
    rows = ((t[i], m.values[i], h_values[i], r_bound) for i in idx)
    if args.format == "json":
        obj = {
            "command": "transient",
            "n": list(n),
            "h": grid.h,
            "t_max": float(t[-1]),
            "bound_role": role,
            "R_bound": r_bound,
            "t": t[idx],
            "M_tilde": m.values[idx],
            "h_bound": h_values[idx],
        }
        _emit(args, obj)
    else:
        _emit(args, {}, header, rows)
    return EXIT_OK


def cmd_bounds(args, model: ModelSpec) -> int:
    n = _index(args.n, model)
    table = bound_table(n, model)
    moments = MomentTable(model) if model.has_common_exponential_delays() else None
    e1 = model.mean_interarrival
    entries = []
    for m in iterate_below(n) + [n]:
        if m.eta == 0:
            continue
        scaled = e1 * chi(m, moments) if moments is not None else None
        entries.append((m, table[m], scaled))
    obj = {
        "command": "bounds",
        "rows": [{"n": list(m), "R": r, "E_tau_chi": s} for m, r, s in entries],
    }
    header = _index_columns(model.k) + ["R", "E_tau_chi"]
    _emit(args, obj, header, [list(m) + [r, s] for m, r, s in entries])
    return EXIT_OK


def cmd_expansion(args, model: ModelSpec) -> int:
    i = args.type - 1
    if not 0 <= i < model.k:
        raise ConfigError(f"--type must lie in 1..{model.k}")
    roots = find_roots(model.interarrival, args.search_bound)
    result = expansion_coeffs(i, model, roots, paper_literal_sign=args.paper_literal_sign)
    obj = {"command": "expansion", **result.to_dict()}
    obj["roots"] = [{"z_re": z.real, "z_im": z.imag, "gamma_re": g.real, "gamma_im": g.imag} for z, g in zip(roots.roots, roots.gammas)]
    header = ["z_re", "z_im", "B_re", "B_im", "used"]
    rows = [(z.real, z.imag, b.real, b.imag, k < result.truncation_order) for k, (z, b) in enumerate(result.b_terms)]
    _emit(args, obj, header, rows)
    return EXIT_OK


def cmd_workload(args, model: ModelSpec) -> int:
    limits = workload_limits(model)
    obj = {"command": "workload", **limits.to_dict()}
    _emit(args, obj, ["mean_limit", "cov_limit"], [(limits.mean_limit, limits.cov_limit)])
    return EXIT_OK


def _parse_stats(text: str, model: ModelSpec) -> list:
    stats = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if part == "workload":
            stats.append("workload")
        elif part.startswith("n="):
            stats.append(_index(part[2:], model))
        else:
            raise ConfigError(f"unknown statistic {part!r}; use n=<index> or workload")
    if not stats:
        raise ConfigError("--stats selects no statistic")
    return stats


def cmd_simulate(args, model: ModelSpec) -> int:
    stats = _parse_stats(args.stats, model)
    paths = simulate_paths(model, args.t, args.reps, args.seed, workers=args.workers)
    estimates = []
    for s in stats:
        if s == "workload":
            estimates.extend(estimate_workload(model, args.t, args.reps, args.seed, paths=paths))
        else:
            estimates.append(estimate_joint_moment(model, s, args.t, args.reps, args.seed, paths=paths))
    header = ["statistic", "estimate", "std_error", "replications", "seed"]
    rows = [(e.statistic, e.estimate, e.std_error, e.replications, e.seed) for e in estimates]
    if args.format == "json":
        report.write_text(report.to_json([e.to_dict() for e in estimates]), args.out)
    else:
        _emit(args, {}, header, rows)
    return EXIT_OK


def cmd_validate(args, model: ModelSpec) -> int:
    result = run_validation(
        model,
        args.upto,
        grid=_grid(args, model),
        t_sim=args.t,
        reps=args.reps,
        seed=args.seed,
        workers=args.workers,
    )
    _emit(args, result.to_dict(), list(result.header), list(result.csv_rows()))
    for row in result.failures():
        print(f"FAIL n={row.n}: rel_err={row.rel_err:.3g} z={row.z_score:.3g}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, fmt_default: str = "json"):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv", "dat"), default=fmt_default)
        return p

    def grid_flags(p):
        p.add_argument("--h", type=float, default=None, help="grid step (default 1e-3 E[tau])")
        p.add_argument("--tmax", type=float, default=None, help="grid horizon (default 40 mean delays)")

    p = add("chi", "limiting joint moments")
    p.add_argument("--n", default=None, help="multi-index, e.g. 2,1")
    p.add_argument("--all-upto", type=int, default=None, help="every index with eta <= H")
    p.add_argument("--below", default=None, help="every nonzero index l <= n componentwise")
    p.set_defaults(func=cmd_chi)

    p = add("transient", "grid solution of the renewal equation", "csv")
    p.add_argument("--n", required=True)
    grid_flags(p)
    p.add_argument("--variant", choices=("atom", "integral"), default="atom", help="transient bound variant")
    p.add_argument("--every", type=int, default=1, help="write every k-th grid point")
    p.add_argument("--no-richardson", action="store_true", help="skip the h/2 extrapolation")
    p.set_defaults(func=cmd_transient)

    p = add("bounds", "uniform bounds R_n")
    p.add_argument("--n", required=True)
    p.set_defaults(func=cmd_bounds)

    p = add("expansion", "asymptotic expansion of the first moment")
    p.add_argument("--type", type=int, required=True, help="1-based type index")
    p.add_argument("--paper-literal-sign", action="store_true", help="use the uncorrected sign of A")
    p.add_argument("--search-bound", type=float, default=None, help="largest real part of roots kept")
    p.set_defaults(func=cmd_expansion)

    p = add("workload", "limiting workload mean and covariance")
    p.set_defaults(func=cmd_workload)

    p = add("simulate", "Monte-Carlo estimates")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats", default="n=1", help="e.g. 'n=1,1;workload'")
    p.add_argument("--workers", type=int, default=None, help="worker processes (capped by DELAYQ_THREADS)")
    p.set_defaults(func=cmd_simulate)

    p = add("validate", "cross-check chi, the transient solver and the simulator")
    p.add_argument("--upto", type=int, default=3)
    grid_flags(p)
    p.add_argument("--t", type=float, default=None, help="simulation horizon (default 30 / mu)")
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        model = load_model(args.model)
        return args.func(args, model)
    except DelayqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
