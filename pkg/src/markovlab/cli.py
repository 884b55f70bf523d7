"""Command line front end: scenario runs, the acceptance suite, and
one-shot helpers for reduction, factors, projections and extensions.

Exit codes: 0 success, 1 acceptance-criterion failure (verify-paper),
2 configuration error (bad scenario, bad polynomial text), 3 numerical
failure (LP stall, internal consistency check).  The MARKOVLAB_THREADS
environment variable caps worker parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import acceptance as acceptance_mod
from . import approx as approx_mod
from . import extension as extension_mod
from . import markov as markov_mod
from .approx import ConsistencyError
from .chebysolve import DegenerateBasisError, LPFailureError
from .polyring import PolyParseError, format_poly, parse_poly, reduce_to_normal_form
from .scenario import (
    NumericalFailure,
    Scenario,
    ScenarioError,
    load_scenario,
    preset_names,
    preset_scenario,
    preset_toml,
    run_scenario,
)

EXIT_OK = 0
EXIT_CRITERION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _resolve_scenario(ref: str) -> Scenario:
    """A scenario reference is a preset name or a TOML file path."""
    if ref in preset_names():
        return preset_scenario(ref)
    return load_scenario(ref)


def _outdir(args) -> str:
    out = getattr(args, "out", None) or "markovlab-out"
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    scn = _resolve_scenario(args.scenario)
    result = run_scenario(scn, _outdir(args))
    for line in result.summary_lines:
        print(line)
    print(f"artifacts written to {result.outdir}: {', '.join(result.artifacts)}")
    return EXIT_OK


def _cmd_verify_paper(args) -> int:
    if args.list:
        for key, title, _ in acceptance_mod.CRITERIA:
            print(f"{key}: {title}")
        return EXIT_OK
    faults = tuple(args.inject_fault or ())
    keys = args.only.split(",") if args.only else None
    ok, results = acceptance_mod.run_all(keys=keys, faults=faults, stream=sys.stdout)
    failed = [r.key for r in results if not r.passed]
    if failed:
        print(f"FAILED criteria: {', '.join(failed)}")
        return EXIT_CRITERION
    print("all acceptance criteria passed")
    return EXIT_OK


def _cmd_reduce(args) -> int:
    scn = _resolve_scenario(args.relation)
    poly = parse_poly(args.poly, scn.nvars)
    nf = reduce_to_normal_form(poly, scn.relation)
    for i, gi in enumerate(nf.g):
        print(f"G_{i} = {format_poly(gi)}")
    print(f"representative = {format_poly(nf.reassemble())}")
    return EXIT_OK


def _cmd_markov_factor(args) -> int:
    scn = _resolve_scenario(args.scenario)
    alpha = tuple(int(v) for v in args.alpha.split(","))
    E = scn.build_sample_set()
    degrees = list(range(1, args.lmax + 1))
    report = markov_mod.build_markov_report(
        scn.relation, E, degrees, [alpha], grading=args.grading
    )
    out = _outdir(args)
    report.to_csv(os.path.join(out, "markov_factors.csv"))
    report.to_witness_json(os.path.join(out, "markov_witnesses.json"))
    print("n,factor,grid_change")
    for row in report.rows:
        print(f"{row.degree},{row.factor:.12g},{row.grid_change:.3e}")
    pairs = [(n, f) for n, f in report.factors(alpha) if n >= 4 and f > 0]
    if len(pairs) >= 4:
        fit = markov_mod.fit_exponent(pairs, alpha_order=sum(alpha))
        print(f"fitted exponent {fit.m_hat:.6g}, constant {fit.M_hat:.6g}")
    else:
        print("window too short for an exponent fit (need 4 degrees past n=3)")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _cmd_approx(args) -> int:
    scn = _resolve_scenario(args.scenario)
    E = scn.build_sample_set()
    values = approx_mod.target_values(args.target, E, scn.relation)
    series = approx_mod.projection_series(values, scn.relation, E, args.lmax)
    out = _outdir(args)
    ladder = [1, 2, 4, 8, 10]
    series.to_csv(os.path.join(out, "approx_series.csv"), r_ladder=ladder)
    print("l,error")
    for e in series.entries:
        print(f"{e.level},{e.error:.12g}")
    diag = approx_mod.rapid_decrease_diagnostic(series, ladder) if args.lmax >= 12 else None
    if diag:
        for row in diag.rows:
            print(f"r={row.r:g}: {row.verdict}")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _cmd_counterexample(args) -> int:
    scn = preset_scenario("example-2-3")
    E = scn.build_sample_set()
    out = _outdir(args)
    rows = ["n,norm,n10_norm,derivative_ratio"]
    print("n,norm,n^10*norm,1/norm")
    for n in range(1, args.nmax + 1):
        nrm = approx_mod.counterexample_norm(n, E)
        rows.append(f"{n},{nrm:.17g},{float(n) ** 10 * nrm:.17g},{1.0 / nrm:.17g}")
        print(f"{n},{nrm:.6e},{float(n) ** 10 * nrm:.6e},{1.0 / nrm:.6e}")
    with open(os.path.join(out, "counterexample.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _cmd_extend(args) -> int:
    scn = _resolve_scenario(args.scenario)
    E = scn.build_sample_set()
    values = approx_mod.target_values(args.target, E, scn.relation)
    series = approx_mod.projection_series(values, scn.relation, E, args.L)
    model = extension_mod.build_extension(series, args.r, args.L)
    on_e = extension_mod.evaluate_extension_many(model, E.points)
    print(f"on-set agreement: {float(np.max(np.abs(on_e - values))):.3e}")
    out = _outdir(args)
    lo = E.points.min(axis=0) - 0.5
    hi = E.points.max(axis=0) + 0.5
    axes = [np.linspace(a, b, args.grid) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    vals = extension_mod.evaluate_extension_many(model, pts)
    path = os.path.join(out, "extension_grid.csv")
    with open(path, "w") as fh:
        fh.write(",".join(f"x{j + 1}" for j in range(pts.shape[1])) + ",value\n")
        for p, v in zip(pts, vals):
            fh.write(",".join(f"{c:.17g}" for c in p) + f",{v:.17g}\n")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    print(preset_toml(args.name), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovlab",
        description="Markov-factor and uniform-approximation experiments on "
        "algebraic hypersurface sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file or preset")
    p.add_argument("scenario", help="scenario TOML path or preset name "
                   f"({', '.join(preset_names())})")
    p.add_argument("--out", help="output directory (default markovlab-out)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("verify-paper", help="run the acceptance suite")
    p.add_argument("--list", action="store_true", help="list criteria without running")
    p.add_argument("--only", help="comma-separated criterion keys")
    p.add_argument("--inject-fault", action="append",
                   help="test hook: corrupt a named constant (markov-constant)")
    p.set_defaults(func=_cmd_verify_paper)

    p = sub.add_parser("reduce", help="reduce a polynomial to normal form")
    p.add_argument("--relation", required=True,
                   help="scenario TOML (its [relation] block is used) or preset name")
    p.add_argument("--poly", required=True, help="polynomial text, e.g. '1*x2^4'")
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("markov-factor", help="derivative factors per degree")
    p.add_argument("--scenario", required=True)
    p.add_argument("--alpha", required=True, help="comma-separated multi-index, e.g. 1,0")
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--grading", default="total", choices=("total", "tensor"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_markov_factor)

    p = sub.add_parser("approx", help="metric projection series for a target")
    p.add_argument("--scenario", required=True)
    p.add_argument("--target", default="exp-xy", choices=sorted(approx_mod.TARGETS))
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("counterexample", help="slow-family norm decay table")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_counterexample)

    p = sub.add_parser("extend", help="build and export a smooth extension")
    p.add_argument("--scenario", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--target", default="exp-xy", choices=sorted(approx_mod.TARGETS))
    p.add_argument("--grid", type=int, default=25, help="grid points per axis")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("preset", help="print a preset scenario as TOML")
    p.add_argument("name", choices=preset_names())
    p.set_defaults(func=_cmd_preset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, PolyParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, LPFailureError, DegenerateBasisError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
