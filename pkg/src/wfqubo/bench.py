"""Benchmark harness: corpus generation, solver matrix, scaling fits, sweeps.

Every random choice is derived from the master seed and the cell coordinates,
so results do not depend on worker count or execution order.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import stats

from .decomposition import DecompositionConfig, run_decomposition
from .generator import GeneratorConfig, derive_seed, generate_instance
from .instance import SCHEMA_VERSION, StarvationError, WorkflowInstance, check_schedule
from .io import read_instance, write_instance
from .qubo import build_default_qubo, encode_schedule, evaluate, normalized_cost
from .solvers import SaConfig, branch_and_bound_schedule, brute_force_qubo, greedy_schedule, simulated_annealing
from .solvers.brute import MAX_VARS

SOLVERS = ("greedy", "bnb", "brute", "sa", "decomp")
RESULT_COLUMNS = [
    "schema_version",
    "instance",
    "n_jobs",
    "solver",
    "seed",
    "status",
    "n_vars",
    "energy",
    "c_min",
    "c_max",
    "normalized_cost",
    "makespan",
    "feasible",
    "proven",
]
TIMING_COLUMNS = ["wall_time"]
WORKERS_ENV = "WFQUBO_WORKERS"


class UsageError(ValueError):
    """Bad command-line or experiment parameters."""


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    sizes: tuple[int, ...] = (5, 10, 15, 20, 25, 30)
    per_size: int = 50
    falloff: str = "inverse"
    solvers: tuple[str, ...] = ("greedy", "bnb")
    seed: int = 0
    sweeps: int = 1000
    attempts: int = 20
    jobs_per_sub: int = 3
    slots_per_sub: int = 2
    bnb_nodes: int = 200_000
    workers: int = 1

    def __post_init__(self):
        if not self.sizes:
            raise UsageError("sizes must not be empty")
        if any(n < 1 for n in self.sizes):
            raise UsageError("sizes must be positive")
        if self.per_size < 1:
            raise UsageError("per_size must be >= 1")
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            raise UsageError(f"unknown solver(s) {unknown}; choose from {list(SOLVERS)}")

    def instance_seed(self, n: int, k: int) -> int:
        return derive_seed(self.seed, n, k)

    def instance_name(self, n: int, k: int) -> str:
        return f"n{n:02d}-{k:03d}"


@dataclass
class ScalingFit:
    kind: str
    params: dict[str, float]
    stderr: dict[str, float]
    r2: float
    points: list[tuple[int, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def predict(self, n: float) -> float:
        if self.kind == "linear":
            return self.params["slope"] * n + self.params["intercept"]
        return self.params["coef"] * n ** self.params["exponent"]


def size_means(pairs: Iterable[tuple[int, float]]) -> list[tuple[int, float, float]]:
    """(n, mean, standard error) per distinct n, sorted by n."""
    groups: dict[int, list[float]] = {}
    for n, y in pairs:
        groups.setdefault(int(n), []).append(float(y))
    out = []
    for n in sorted(groups):
        ys = np.array(groups[n])
        se = float(ys.std(ddof=1) / math.sqrt(len(ys))) if len(ys) > 1 else 0.0
        out.append((n, float(ys.mean()), se))
    return out


def _need_sizes(points: Sequence[tuple[int, float, float]]) -> None:
    if len(points) < 3:
        raise UsageError(f"scaling fit needs at least 3 distinct sizes, got {len(points)}")


def fit_linear(pairs: Iterable[tuple[int, float]]) -> ScalingFit:
    """Least-squares a*N + b on per-size means."""
    pts = size_means(pairs)
    _need_sizes(pts)
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts])
    res = stats.linregress(x, y)
    return ScalingFit(
        "linear",
        {"slope": float(res.slope), "intercept": float(res.intercept)},
        {"slope": float(res.stderr), "intercept": float(res.intercept_stderr)},
        float(res.rvalue**2),
        pts,
    )


def fit_power(pairs: Iterable[tuple[int, float]]) -> ScalingFit:
    """Least-squares c*N^e on per-size means, fitted in log-log space."""
    pts = size_means(pairs)
    _need_sizes(pts)
    if any(p[1] <= 0 for p in pts):
        raise UsageError("power fit needs positive means")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    res = stats.linregress(lx, ly)
    coef = float(math.exp(res.intercept))
    return ScalingFit(
        "power",
        {"exponent": float(res.slope), "coef": coef},
        {"exponent": float(res.stderr), "coef": coef * float(res.intercept_stderr)},
        float(res.rvalue**2),
        pts,
    )


def corpus(spec: ExperimentSpec) -> Iterable[tuple[str, WorkflowInstance]]:
    for n in spec.sizes:
        for k in range(spec.per_size):
            cfg = GeneratorConfig(n, falloff=spec.falloff, seed=spec.instance_seed(n, k))
            inst = generate_instance(cfg)
            yield spec.instance_name(n, k), inst


def cmd_generate(spec: ExperimentSpec, out: str | Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, inst in corpus(spec):
        p = out / f"{name}.json"
        write_instance(inst, p)
        paths.append(p)
    return paths


def _cell(inst: WorkflowInstance, solver: str, spec: ExperimentSpec, seed: int, model) -> dict[str, Any]:
    row: dict[str, Any] = {"solver": solver, "seed": seed, "status": "ok", "energy": None, "makespan": None}
    row.update(feasible=False, proven="", max_seen=None, wall_time=0.0)
    sched = None
    if solver == "greedy":
        t0 = time.perf_counter()
        sched = greedy_schedule(inst)
        row["wall_time"] = time.perf_counter() - t0
    elif solver == "bnb":
        res = branch_and_bound_schedule(inst, node_limit=spec.bnb_nodes)
        sched = res.schedule
        row["wall_time"] = res.wall_time
        row["proven"] = res.proven
        if not res.proven:
            row["status"] = "budget"
    elif solver == "decomp":
        t0 = time.perf_counter()
        cfg = DecompositionConfig(spec.jobs_per_sub, spec.slots_per_sub, seed=seed)
        sched = run_decomposition(inst, cfg).schedule
        row["wall_time"] = time.perf_counter() - t0
    elif solver == "brute":
        if model.n_vars > MAX_VARS:
            row["status"] = "skipped"
            return row
        res = brute_force_qubo(model)
        row.update(energy=res.energy, makespan=res.makespan, feasible=res.feasible, wall_time=res.wall_time)
        row["max_seen"] = res.max_energy_seen
        return row
    else:
        res = simulated_annealing(model, SaConfig(spec.sweeps, spec.attempts, seed=seed))
        row.update(energy=res.energy, makespan=res.makespan, feasible=res.feasible, wall_time=res.wall_time)
        row["max_seen"] = res.max_energy_seen
        return row
    rep = check_schedule(inst, sched)
    row["feasible"] = rep.feasible
    row["makespan"] = sched.makespan
    if max(sched.start.values(), default=0) < inst.horizon:
        row["energy"] = evaluate(model, encode_schedule(model, sched))
    return row


def solve_instance(name: str, inst: WorkflowInstance, spec: ExperimentSpec) -> list[dict[str, Any]]:
    """All solver rows for one instance, with shared normalization bounds."""
    model = build_default_qubo(inst)
    rows = []
    for s in spec.solvers:
        seed = derive_seed(spec.seed, inst.n_jobs, _name_key(name), SOLVERS.index(s)) % 2**32
        try:
            row = _cell(inst, s, spec, seed, model)
        except StarvationError:
            row = {"solver": s, "seed": seed, "status": "starved", "energy": None, "makespan": None}
            row.update(feasible=False, proven="", max_seen=None, wall_time=0.0)
        rows.append(row)
    energies = [r["energy"] for r in rows if r["energy"] is not None]
    if "bnb" not in spec.solvers:
        bnb = branch_and_bound_schedule(inst, node_limit=spec.bnb_nodes).schedule
        energies.append(evaluate(model, encode_schedule(model, bnb)))
    zero = evaluate(model, np.zeros(model.n_vars, dtype=np.int8))
    highs = [zero] + energies + [r["max_seen"] for r in rows if r["max_seen"] is not None]
    c_min = min(energies) if energies else None
    c_max = max(highs)
    for r in rows:
        r.pop("max_seen")
        r.update(
            schema_version=SCHEMA_VERSION,
            instance=name,
            n_jobs=inst.n_jobs,
            n_vars=model.n_vars,
            c_min=c_min,
            c_max=c_max,
        )
        if r["energy"] is None or c_min is None:
            r["normalized_cost"] = None
        elif c_max == c_min:
            r["normalized_cost"] = 0.0
        else:
            r["normalized_cost"] = normalized_cost(r["energy"], c_min, c_max)
    return rows


def _name_key(name: str) -> int:
    # stable integer from the instance name
    return int.from_bytes(name.encode(), "little") % 2**61


def _solve_job(args) -> list[dict[str, Any]]:
    name, path, spec = args
    return solve_instance(name, read_instance(path), spec)


def cmd_solve(paths: Sequence[str | Path], spec: ExperimentSpec) -> list[dict[str, Any]]:
    items = sorted((Path(p).stem, str(p)) for p in paths)
    jobs = [(name, path, spec) for name, path in items]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(spec.workers) as ex:
            chunks = list(ex.map(_solve_job, jobs))
    else:
        chunks = [_solve_job(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[dict[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def write_results(rows: Sequence[dict[str, Any]], path: str | Path, with_timing: bool = True) -> None:
    cols = RESULT_COLUMNS + (TIMING_COLUMNS if with_timing else [])
    Path(path).write_text(rows_to_csv(rows, cols))


def read_rows(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_timing(text: str) -> str:
    """CSV text without the timing columns, for reproducibility comparisons."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return ""
    keep = [k for k, c in enumerate(rows[0]) if c not in TIMING_COLUMNS]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([r[k] for k in keep])
    return buf.getvalue()


def makespan_pairs_from_rows(rows: Iterable[dict[str, str]], solver: str = "greedy") -> list[tuple[int, float]]:
    return [(int(r["n_jobs"]), float(r["makespan"])) for r in rows if r["solver"] == solver and r["makespan"]]


def greedy_makespans(spec: ExperimentSpec) -> list[tuple[int, float]]:
    return [(inst.n_jobs, greedy_schedule(inst).makespan) for _, inst in corpus(spec)]


def qubo_sizes(spec: ExperimentSpec) -> list[tuple[int, float]]:
    return [(inst.n_jobs, build_default_qubo(inst).n_vars) for _, inst in corpus(spec)]


@dataclass
class SweepSummary:
    sub_size: int
    slots: int
    mean: float
    stderr: float
    count: int


def decomposition_sweep(
    instances: Sequence[tuple[str, WorkflowInstance]],
    sub_sizes: Sequence[int],
    ratio: float = 1.0,
    sub_solver: str = "exact",
    seed: int = 0,
) -> tuple[list[dict[str, Any]], list[SweepSummary]]:
    """Decomposition makespan per (instance, sub-problem size).

    ``ratio`` is jobs per slot; the window holds max(1, round(size / ratio)) slots.
    """
    if ratio <= 0:
        raise UsageError("ratio must be positive")
    rows = []
    for size in sub_sizes:
        slots = max(1, round(size / ratio))
        for name, inst in instances:
            cfg = DecompositionConfig(size, slots, sub_solver=sub_solver, seed=seed)
            try:
                run = run_decomposition(inst, cfg)
            except StarvationError:
                rows.append({"instance": name, "sub_size": size, "slots": slots, "status": "starved"})
                continue
            rep = check_schedule(inst, run.schedule)
            rows.append(
                {
                    "instance": name,
                    "sub_size": size,
                    "slots": slots,
                    "status": "ok",
                    "makespan": run.makespan,
                    "feasible": rep.feasible,
                    "steps": len(run.trace),
                    "max_sub_qubo_vars": run.max_sub_qubo_vars,
                }
            )
    summary = []
    for size in sub_sizes:
        ms = [r["makespan"] for r in rows if r["sub_size"] == size and r["status"] == "ok"]
        (_, mean, se), = size_means((size, m) for m in ms) if ms else [(size, float("nan"), float("nan"))]
        summary.append(SweepSummary(size, max(1, round(size / ratio)), mean, se, len(ms)))
    return rows, summary


def max_adjacent_increase(summary: Sequence[SweepSummary]) -> float:
    """Largest rise of the mean makespan between neighbouring sub-problem sizes."""
    means = [s.mean for s in summary]
    return max((b - a for a, b in zip(means, means[1:])), default=0.0)
