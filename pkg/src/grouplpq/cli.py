"""Command line front end: ``grouplpq <command> [options]``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import bench, fileio
from .datagen import NOISE_KINDS, GenSpec, gen_problem
from .issapl import SolverConfig, solve
from .model import format_r, parse_r

log = logging.getLogger("grouplpq")


def _global_flags(defaults: bool) -> argparse.ArgumentParser:
    """Flags accepted before or after the command.

    The copy attached to subcommands suppresses defaults so that a flag
    given before the command is not reset by the subparser.
    """
    def d(value):
        return value if defaults else argparse.SUPPRESS

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(None), help="master seed (overrides the plan's)")
    common.add_argument("--threads", type=int, default=d(1), help="worker processes for trials")
    common.add_argument("--out", type=Path, default=d(None), help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(defaults=False)
    parser = argparse.ArgumentParser(prog="grouplpq", parents=[_global_flags(defaults=True)],
                                     description="Group-sparse l_{p,q}-l_r recovery: solver and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    g = sub.add_parser("gen", parents=[common], help="write a synthetic problem (manifest + binaries)")
    g.add_argument("--M", type=int, default=256)
    g.add_argument("--N", type=int, default=1024)
    g.add_argument("--n", type=int, default=8, help="group size")
    g.add_argument("--s", type=int, default=8, help="number of nonzero groups")
    g.add_argument("--sigma", type=float, default=0.001)
    g.add_argument("--noise", choices=NOISE_KINDS, default="gaussian")
    g.add_argument("--alpha", type=float, default=0.003)
    g.add_argument("--p", type=float, default=2.0)
    g.add_argument("--q", type=float, default=0.5)
    g.add_argument("--r", default="2", help='fidelity exponent, a number >= 1 or "inf"')

    s = sub.add_parser("solve", parents=[common], help="solve a problem file")
    s.add_argument("problem", type=Path, help="problem manifest (JSON)")
    s.add_argument("--config", type=Path, default=None, help="solver config JSON (SolverConfig fields)")

    e = sub.add_parser("experiment", parents=[common], help="run an experiment plan")
    e.add_argument("plan", help="plan JSON file, or preset:<name>")
    _result_flags(e)

    sub.add_parser("verify", parents=[common], help="check every prox operator against its oracle") \
        .add_argument("--draws", type=int, default=1000)

    for name, help_text in (("compare-r", "fidelity exponent vs noise kind (r in 1, 2, inf)"),
                            ("table1", "relative error at s = 8, 16 (sigma = 0.001)"),
                            ("table3-self", "solver-only rows at two problem sizes")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        _result_flags(p)
    return parser


def _result_flags(p):
    p.add_argument("--format", choices=("csv", "json"), default=None,
                   help="result format (default: from --out suffix, else csv)")
    p.add_argument("--trials", type=int, default=None, help="override trials per sweep point")
    p.add_argument("--timing", action="store_true",
                   help="record mean wall time (makes the output run-dependent)")


def _load_plan(spec: str, args) -> bench.ExperimentPlan:
    if spec.startswith("preset:"):
        data = bench.load_preset(spec.split(":", 1)[1])
    else:
        data = json.loads(Path(spec).read_text())
    if args.seed is not None:
        data["seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    return bench.ExperimentPlan.from_dict(data)


def _emit(rows, args) -> str:
    fmt = args.format or ("json" if args.out is not None and args.out.suffix == ".json" else "csv")
    text = bench.format_results(rows, fmt, timing=args.timing)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(f"wrote {args.out}", file=sys.stderr)
    return text


def _progress(done, total):
    log.info("trial %d/%d", done, total)


def cmd_gen(args) -> int:
    spec = GenSpec(M=args.M, N=args.N, n=args.n, s=args.s, sigma=args.sigma,
                   noise_kind=args.noise, seed=args.seed or 0)
    problem, x_or = gen_problem(spec, args.alpha, args.p, args.q, parse_r(args.r))
    out = args.out or Path("problem.json")
    if out.suffix != ".json":
        out = out / "problem.json"
    fileio.save_problem(problem, out)
    fileio.save_solution(x_or, out.with_name(out.stem + ".truth.bin"),
                         {"generator": dataclasses.asdict(spec)})
    print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    problem = fileio.load_problem(args.problem)
    cfg = {}
    if args.config is not None:
        cfg = json.loads(args.config.read_text())
    if args.seed is not None:
        cfg.setdefault("init_seed", args.seed)
    config = SolverConfig.from_dict(cfg)
    x, record = solve(problem, config)
    out = args.out or args.problem.with_name(args.problem.stem + ".solution.bin")
    extra = {"config": config.to_dict(), "run": record.to_dict(),
             "problem": {"alpha": problem.alpha, "p": problem.p, "q": problem.q, "r": format_r(problem.r)}}
    sidecar = fileio.save_solution(x, out, extra)
    last = record.entries[-1] if record.entries else None
    print(f"wrote {out} and {sidecar}", file=sys.stderr)
    if last is not None:
        print(f"objective {last.objective:.6g}, support {last.support_size} groups, "
              f"{record.outer_iterations} outer steps", file=sys.stderr)
    return 0


def cmd_experiment(args) -> int:
    plan = _load_plan(args.plan, args)
    rows = bench.run_experiment(plan, threads=args.threads, progress=_progress)
    _emit(rows, args)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(args.draws, seed=args.seed or 0)
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


def _preset_command(name):
    def run(args) -> int:
        plan = _load_plan(f"preset:{name}", args)
        rows = bench.run_experiment(plan, threads=args.threads, progress=_progress)
        _emit(rows, args)
        if name == "compare_r":
            cells = bench.r_cells(plan, rows)
            for c in cells:
                errs = "  ".join(f"r={r}: {e:.4f}" for r, e in c.errors.items())
                mark = "matched" if c.matched else f"best r={c.winner}"
                print(f"{c.noise:>8} s={c.s:<3} {errs}  [{mark}]", file=sys.stderr)
            print(f"matched r strictly best in {sum(c.matched for c in cells)}/{len(cells)} cells",
                  file=sys.stderr)
        return 0
    return run


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "experiment": cmd_experiment,
    "verify": cmd_verify,
    "compare-r": _preset_command("compare_r"),
    "table1": _preset_command("table1"),
    "table3-self": _preset_command("table3_self"),
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # reported, not raised: the exit code carries it
        print(f"grouplpq {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
