"""``wfqubo`` command-line entry point."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import bench
from .bench import ExperimentSpec, UsageError
from .generator import FALLOFFS
from .instance import StarvationError
from .io import read_instance
from .lpformat import export_lp

EXIT_OK, EXIT_USAGE, EXIT_STARVED = 0, 2, 3


def parse_int_list(text: str) -> tuple[int, ...]:
    """'5,10,15' or a range 'lo:hi[:step]' (hi inclusive)."""
    text = text.strip()
    if not text:
        raise UsageError("empty size list")
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) not in (2, 3):
            raise UsageError(f"bad range {text!r}")
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else 1
        if step < 1:
            raise UsageError("range step must be >= 1")
        vals = tuple(range(lo, hi + 1, step))
    else:
        vals = tuple(int(p) for p in text.split(",") if p.strip())
    if not vals:
        raise UsageError(f"size list {text!r} is empty")
    return vals


def _collect(paths: Sequence[str]) -> list[Path]:
    out: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(p.glob("*.json")))
        elif p.exists():
            out.append(p)
        else:
            raise UsageError(f"no such instance file or directory: {p}")
    if not out:
        raise UsageError("no instance files given")
    return out


def _spec(args, **over) -> ExperimentSpec:
    fields = dict(
        sizes=parse_int_list(args.sizes),
        per_size=args.per_size,
        falloff=args.falloff,
        seed=args.seed,
    )
    for name in ("sweeps", "attempts", "jobs_per_sub", "slots_per_sub", "bnb_nodes"):
        if hasattr(args, name):
            fields[name] = getattr(args, name)
    if getattr(args, "solver", None):
        fields["solvers"] = tuple(args.solver)
    if hasattr(args, "workers"):
        fields["workers"] = args.workers if args.workers is not None else bench.default_workers()
    fields.update(over)
    return ExperimentSpec(**fields)


def _write_fit(fit: bench.ScalingFit, out: str | None, label: str) -> None:
    doc = json.dumps(fit.to_dict(), indent=1)
    if out:
        Path(out).write_text(doc + "\n")
        plot = Path(out).with_suffix(".csv")
        rows = [{"n": n, "mean": m, "stderr": s, "fit": fit.predict(n)} for n, m, s in fit.points]
        plot.write_text(bench.rows_to_csv(rows, ["n", "mean", "stderr", "fit"]))
    key = "slope" if fit.kind == "linear" else "exponent"
    print(f"{label}: {key} = {fit.params[key]:.4f} +/- {fit.stderr[key]:.4f}, R^2 = {fit.r2:.4f}")


def cmd_generate(args) -> int:
    paths = bench.cmd_generate(_spec(args), args.out)
    print(f"wrote {len(paths)} instances to {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    paths = _collect(args.instances)
    spec = _spec(args, sizes=(1,))
    rows = bench.cmd_solve(paths, spec)
    bench.write_results(rows, args.out)
    meta = {
        "schema_version": bench.SCHEMA_VERSION,
        "seed": spec.seed,
        "solvers": list(spec.solvers),
        "sweeps": spec.sweeps,
        "attempts": spec.attempts,
        "bnb_nodes": spec.bnb_nodes,
        "c_min": "min energy over solver rows and the encoded branch-and-bound schedule",
        "c_max": "max over all-zero bits, row energies and the worst energy seen by samplers",
        "timing_columns": bench.TIMING_COLUMNS,
    }
    Path(args.out).with_suffix(".meta.json").write_text(json.dumps(meta, indent=1) + "\n")
    bad = [r for r in rows if r["status"] in ("starved", "budget")]
    print(f"wrote {len(rows)} rows to {args.out}")
    if bad:
        print(f"{len(bad)} cells starved or ran out of budget", file=sys.stderr)
        return EXIT_STARVED
    return EXIT_OK


def cmd_fit_makespan(args) -> int:
    if args.results:
        pairs = bench.makespan_pairs_from_rows(bench.read_rows(args.results))
    else:
        pairs = bench.greedy_makespans(_spec(args))
    _write_fit(bench.fit_linear(pairs), args.out, "greedy makespan")
    return EXIT_OK


def cmd_fit_qubosize(args) -> int:
    if args.instances:
        from .qubo import build_default_qubo

        pairs = []
        for p in _collect(args.instances):
            inst = read_instance(p)
            pairs.append((inst.n_jobs, build_default_qubo(inst).n_vars))
    else:
        pairs = bench.qubo_sizes(_spec(args))
    _write_fit(bench.fit_power(pairs), args.out, "QUBO size")
    return EXIT_OK


def cmd_decomp_sweep(args) -> int:
    if args.instances:
        insts = [(p.stem, read_instance(p)) for p in _collect(args.instances)]
    else:
        insts = list(bench.corpus(_spec(args)))
    sub_sizes = parse_int_list(args.sub_sizes)
    rows, summary = bench.decomposition_sweep(insts, sub_sizes, args.ratio, args.sub_solver, args.seed)
    cols = ["instance", "sub_size", "slots", "status", "makespan", "feasible", "steps", "max_sub_qubo_vars"]
    Path(args.out).write_text(bench.rows_to_csv(rows, cols))
    summ = [vars(s) for s in summary]
    Path(args.out).with_suffix(".summary.csv").write_text(
        bench.rows_to_csv(summ, ["sub_size", "slots", "mean", "stderr", "count"])
    )
    for s in summary:
        print(f"size {s.sub_size} ({s.slots} slots): mean makespan {s.mean:.2f} +/- {s.stderr:.2f} over {s.count}")
    print(f"largest adjacent increase: {bench.max_adjacent_increase(summary):+.2f}")
    return EXIT_STARVED if any(r["status"] == "starved" for r in rows) else EXIT_OK


def cmd_export_lp(args) -> int:
    export_lp(read_instance(args.instance), None, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfqubo", description="Workflow scheduling QUBO benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    def corpus_flags(sp, sizes="5:30:5", per_size=50):
        sp.add_argument("--seed", type=int, default=0, help="master seed")
        sp.add_argument("--sizes", default=sizes, help="job counts, e.g. 5,10,15 or 5:30:5")
        sp.add_argument("--per-size", type=int, default=per_size)
        sp.add_argument("--falloff", choices=sorted(FALLOFFS), default="inverse")

    g = sub.add_parser("generate", help="write a random instance corpus")
    corpus_flags(g)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run a solver matrix over instance files")
    s.add_argument("instances", nargs="+", help="instance files or directories")
    corpus_flags(s)
    s.add_argument("--solver", action="append", choices=bench.SOLVERS, help="repeatable; default greedy and bnb")
    s.add_argument("--sweeps", type=int, default=1000)
    s.add_argument("--attempts", type=int, default=20)
    s.add_argument("--jobs-per-sub", type=int, default=3)
    s.add_argument("--slots-per-sub", type=int, default=2)
    s.add_argument("--bnb-nodes", type=int, default=200_000, help="node budget for branch and bound")
    s.add_argument("--workers", type=int, default=None, help=f"parallel instances (default ${bench.WORKERS_ENV} or 1)")
    s.add_argument("--out", required=True, help="results CSV")
    s.set_defaults(func=cmd_solve)

    fm = sub.add_parser("fit-makespan", help="linear fit of mean greedy makespan vs N")
    corpus_flags(fm)
    fm.add_argument("--results", help="results CSV with greedy rows (default: generate a corpus)")
    fm.add_argument("--out", help="fit JSON; a plot CSV is written next to it")
    fm.set_defaults(func=cmd_fit_makespan)

    fq = sub.add_parser("fit-qubosize", help="power-law fit of QUBO variable count vs N")
    corpus_flags(fq)
    fq.add_argument("instances", nargs="*", help="instance files or directories (default: generate)")
    fq.add_argument("--out", help="fit JSON; a plot CSV is written next to it")
    fq.set_defaults(func=cmd_fit_qubosize)

    d = sub.add_parser("decomp-sweep", help="decomposition makespan vs sub-problem size")
    corpus_flags(d, sizes="20")
    d.add_argument("instances", nargs="*", help="instance files or directories (default: generate)")
    d.add_argument("--sub-sizes", default="2:8", help="jobs per sub-problem")
    d.add_argument("--ratio", type=float, default=1.0, help="jobs per slot inside a window")
    d.add_argument("--sub-solver", choices=("exact", "brute", "sa"), default="exact")
    d.add_argument("--out", required=True, help="per-run CSV; summary goes to <out>.summary.csv")
    d.set_defaults(func=cmd_decomp_sweep)

    e = sub.add_parser("export-lp", help="write an instance as an LP file")
    e.add_argument("instance")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export_lp)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        # UsageError, InstanceError and bad config values all land here
        print(f"wfqubo: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StarvationError as exc:
        print(f"wfqubo: {exc}", file=sys.stderr)
        return EXIT_STARVED


if __name__ == "__main__":
    sys.exit(main())
