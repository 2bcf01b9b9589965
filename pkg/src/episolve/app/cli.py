"""Command-line interface: ``episolve simulate | verify <case> | bench``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from episolve.app.bench import BenchPlan, bench_run, write_bench
from episolve.app.output import write_csv
from episolve.app.scenario import ConfigError, Scenario, load_config
from episolve.app.simulate import simulate
from episolve.mesh import MeshError
from episolve.schwarz import PC_KINDS
from episolve.seird import NonPositiveDensityError
from episolve.sparsela import SingularMatrixError

log = logging.getLogger("episolve")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pc(text):
    from episolve.schwarz import _ALIASES

    kind = _ALIASES.get(text, text)
    if kind not in PC_KINDS:
        raise argparse.ArgumentTypeError(f"unknown pc kind {text!r}; choose from {', '.join(PC_KINDS)}")
    return kind


def _add_solver_flags(p):
    p.add_argument("--config", type=Path, help="scenario file (key = value lines)")
    p.add_argument("--pc", type=_pc, help=f"preconditioner: {', '.join(PC_KINDS)}")
    p.add_argument("--subdomains", type=int)
    p.add_argument("--overlap", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--amg-theta", type=float)
    p.add_argument("--amg-max-levels", type=int)
    p.add_argument("--amg-coarse-size", type=int)
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded run with fixed partitioning (bit-reproducible)")
    p.add_argument("--out-dir", type=Path, default=Path("."))


def build_parser():
    parser = argparse.ArgumentParser(prog="episolve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario")
    _add_solver_flags(sim)
    sim.add_argument("--no-fields", action="store_true", help="skip VTK snapshots")

    ver = sub.add_parser("verify", help="run a verification case")
    ver.add_argument("case", choices=["mms1d-space", "mms1d-time", "mms2d", "ode-limit"])
    ver.add_argument("--out-dir", type=Path, default=Path("."))
    ver.add_argument("--T", type=float, help="end time for mms2d / ode-limit")
    ver.add_argument("--n", type=int, help="mesh resolution for mms2d / ode-limit")
    ver.add_argument("--dt", type=float, help="time step for mms2d / ode-limit")

    ben = sub.add_parser("bench", help="scalability benchmark")
    _add_solver_flags(ben)
    ben.set_defaults(threads=None)
    ben.add_argument("--mode", choices=["strong", "weak"], default="strong")
    ben.add_argument("--thread-list", "--threads-list", dest="thread_list", type=_int_list)
    ben.add_argument("--sizes", type=_int_list, help="mesh sizes (weak mode: one per thread count)")
    ben.add_argument("--subdomain-list", type=_int_list)
    ben.add_argument("--pcs", type=lambda s: [_pc(v) for v in s.split(",")])
    ben.add_argument("--repetitions", type=int, default=1)
    return parser


def scenario_from_args(args):
    sc = load_config(args.config) if getattr(args, "config", None) else Scenario()
    changes = {}
    for flag, attr in [("pc", "pc"), ("subdomains", "subdomains"), ("overlap", "overlap"),
                       ("threads", "threads"), ("dt", "dt"), ("steps", "steps"),
                       ("amg_theta", "amg_theta"), ("amg_max_levels", "amg_max_levels"),
                       ("amg_coarse_size", "amg_coarse_size")]:
        v = getattr(args, flag, None)
        if v is not None:
            changes[attr] = v
    if getattr(args, "deterministic", False):
        changes["threads"] = 1
    return replace(sc, **changes)


def cmd_simulate(args):
    sc = scenario_from_args(args)
    report = simulate(sc, args.out_dir, write_fields=not args.no_fields)
    last = report.steps[-1] if report.steps else None
    print(f"{len(report)} steps, mean Picard {report.mean('picard_iterations'):.2f}, "
          f"mean Krylov {report.mean('krylov_sum'):.1f}"
          + (f", population drift {last.drift:.2e}" if last else ""))
    print(f"wrote {Path(args.out_dir) / 'timeseries.csv'}")
    return EXIT_OK if report.all_converged else EXIT_FAIL


def cmd_verify(args):
    from episolve.verify.cases import run_case

    kw = {}
    if args.case == "mms2d":
        kw = {k: v for k, v in (("T", args.T), ("n", args.n), ("dt", args.dt)) if v is not None}
    elif args.case == "ode-limit":
        kw = {k: v for k, v in (("T", args.T), ("n", args.n), ("dt", args.dt)) if v is not None}
    res = run_case(args.case, **kw)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"verify_{args.case}.csv"
    write_csv(path, res.columns, res.rows)
    print("  ".join(f"{c:>12}" for c in res.columns))
    for row in res.rows:
        print("  ".join(f"{str(v):>12}" for v in row))
    for c in res.checks:
        print(c.line())
    print(f"{args.case}: {'PASS' if res.passed else 'FAIL'} (wrote {path})")
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_bench(args):
    sc = scenario_from_args(args)
    threads = args.thread_list or ([args.threads] if args.threads else [1])
    if args.deterministic:
        log.info("--deterministic: partitioning is fixed; thread counts still swept")
    plan = BenchPlan(
        mode=args.mode, threads=threads, mesh_sizes=args.sizes or [],
        subdomains=args.subdomain_list or [], pcs=args.pcs or [],
        steps=args.steps or sc.steps, repetitions=args.repetitions,
    )
    rows = bench_run(plan, sc)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_bench(out / "bench.csv", rows)
    for r in rows:
        print(f"{r.pc:>8} threads={r.threads:<3} subdomains={r.subdomains:<4} dofs={r.dofs:<8} "
              f"picard={r.avg_picard:.2f} krylov={r.avg_krylov:.1f} setup={r.setup_s:.3f}s "
              f"solve={r.solve_s:.3f}s{' FAILED' if r.failed else ''}")
    return EXIT_FAIL if any(r.failed for r in rows) else EXIT_OK


def run_cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"simulate": cmd_simulate, "verify": cmd_verify, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except (ConfigError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularMatrixError, NonPositiveDensityError, FloatingPointError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main():
    sys.exit(run_cli())
