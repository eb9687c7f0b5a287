"""One test per acceptance criterion; each records a PASS/FAIL line for the summary."""

import time

import pytest

import conftest
from wfqubo import bench
from wfqubo.bench import ExperimentSpec
from wfqubo.decomposition import DecompositionConfig, run_decomposition
from wfqubo.generator import GeneratorConfig, derive_seed, generate_instance
from wfqubo.qubo import build_default_qubo, evaluate_parts
from wfqubo.solvers import SaConfig, branch_and_bound_schedule, brute_force_qubo, greedy_schedule, simulated_annealing


def record(label: str, ok: bool, detail: str) -> None:
    conftest.ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")


def small_corpus(count=200, max_vars=20):
    """Seeded random instances whose reduced models fit the brute-force solver."""
    out, k = [], 0
    while len(out) < count:
        n = 2 + k % 3
        hi = (10, 3, 2)[(k // 3) % 3]
        inst = generate_instance(GeneratorConfig(n, seed=derive_seed(2024, k), resource_hi=hi))
        model = build_default_qubo(inst)
        if model.n_vars <= max_vars:
            out.append((inst, model))
        k += 1
    return out


@pytest.fixture(scope="module")
def oracle_runs():
    t0 = time.perf_counter()
    runs = []
    for inst, model in small_corpus():
        res = brute_force_qubo(model)
        runs.append((inst, model, res, branch_and_bound_schedule(inst)))
    return runs, time.perf_counter() - t0


def test_criterion_1_canonical(canonical):
    t0 = time.perf_counter()
    g = greedy_schedule(canonical).makespan
    b = branch_and_bound_schedule(canonical)
    run = run_decomposition(canonical, DecompositionConfig(3, 2, sub_solver="exact"))
    steps = [sorted(j for j, _ in r["scheduled"]) for r in run.trace]
    elapsed = time.perf_counter() - t0
    ok = (g, b.makespan, run.makespan, steps) == (7, 5, 5, [[0, 2], [1, 3, 4], [5]]) and b.proven and elapsed < 1.0
    record("1", ok, f"greedy={g} bnb={b.makespan} decomp={run.makespan} steps={steps} ({elapsed:.2f}s < 1s)")
    assert ok


def test_criterion_2_oracle_equivalence(oracle_runs):
    runs, elapsed = oracle_runs
    good = sum(r.feasible and r.makespan == b.makespan for _, _, r, b in runs)
    ok = good == len(runs) and len(runs) >= 200 and elapsed < 120
    record("2", ok, f"{good}/{len(runs)} brute minima decode to the B&B makespan ({elapsed:.1f}s < 120s)")
    assert ok


def test_criterion_3_feasibility_guarantee(oracle_runs):
    runs, _ = oracle_runs
    clean = sum(evaluate_parts(m, r.bits)[1] == 0 for _, m, r, _ in runs)
    ok = clean == len(runs)
    record("3", ok, f"{clean}/{len(runs)} brute optima have zero constraint energy")
    assert ok


def test_criterion_4_sa_quality():
    t0 = time.perf_counter()
    cfg = lambda s: SaConfig(sweeps=1000, attempts=20, seed=s)  # noqa: E731
    models = [m for _, m in small_corpus(count=100, max_vars=18)]
    hits = sum(simulated_annealing(m, cfg(k)).energy == brute_force_qubo(m).energy for k, m in enumerate(models))
    five = list(bench.corpus(ExperimentSpec(sizes=(5,), per_size=20)))
    opt = 0
    for k, (_, inst) in enumerate(five):
        res = simulated_annealing(build_default_qubo(inst), cfg(k))
        opt += res.feasible and res.makespan == branch_and_bound_schedule(inst).makespan
    elapsed = time.perf_counter() - t0
    ok_a = hits >= 0.95 * len(models)
    ok_b = opt >= 0.9 * len(five)
    record("4a", ok_a, f"SA matches brute optimum on {hits}/{len(models)} models (need >= 95%)")
    record("4b", ok_b, f"SA reaches the B&B makespan on {opt}/{len(five)} five-job instances (need >= 90%)")
    record("4 runtime", elapsed < 300, f"{elapsed:.1f}s < 300s")
    assert ok_a and ok_b and elapsed < 300


def test_criterion_5_scaling():
    t0 = time.perf_counter()
    spec = ExperimentSpec(sizes=(5, 10, 15, 20, 25, 30), per_size=50, falloff="inverse")
    lin = bench.fit_linear(bench.greedy_makespans(spec))
    sizes = bench.qubo_sizes(spec)
    power = bench.fit_power(sizes)
    means = {n: m for n, m, _ in bench.size_means(sizes)}
    elapsed = time.perf_counter() - t0
    slope, expo = lin.params["slope"], power.params["exponent"]
    ok_a = 2.0 <= slope <= 3.5
    ok_b = 1.5 <= expo <= 2.0
    targets = {5: 60, 10: 210, 15: 720}
    within = {n: abs(means[n] - t) <= 0.3 * t for n, t in targets.items()}
    ok_c = all(within.values())
    record("5a", ok_a, f"greedy makespan slope {slope:.3f} in [2.0, 3.5]")
    record("5b", ok_b, f"QUBO size exponent {expo:.3f} in [1.5, 2.0]")
    detail = " ".join(f"N={n}:{means[n]:.1f}/{t}" for n, t in targets.items())
    record("5c", ok_c, f"mean variable counts within 30%: {detail}")
    record("5 runtime", elapsed < 300, f"{elapsed:.1f}s < 300s")
    assert ok_a and ok_b and ok_c and elapsed < 300


def test_criterion_6_decomposition_sweep():
    t0 = time.perf_counter()
    insts = list(bench.corpus(ExperimentSpec(sizes=(20,), per_size=50)))
    rows, summary = bench.decomposition_sweep(insts, range(2, 9), ratio=1, sub_solver="exact")
    bnb = {name: branch_and_bound_schedule(inst, node_limit=50_000) for name, inst in insts}
    sound = all(r["status"] == "ok" and r["feasible"] for r in rows)
    proven = {n: b.makespan for n, b in bnb.items() if b.proven}
    bounded = all(r["makespan"] >= proven[r["instance"]] for r in rows if r["instance"] in proven)
    rise = bench.max_adjacent_increase(summary)
    elapsed = time.perf_counter() - t0
    ok = sound and bounded and rise <= 1.0 and elapsed < 600
    means = " ".join(f"{s.sub_size}:{s.mean:.1f}" for s in summary)
    record(
        "6",
        ok,
        f"means {means}; max rise {rise:+.2f} <= 1; feasible={sound}; >= B&B on {len(proven)} proven ({elapsed:.0f}s < 600s)",
    )
    assert ok


def test_criterion_7_determinism(tmp_path):
    spec = ExperimentSpec(sizes=(5, 6), per_size=3, solvers=("greedy", "bnb", "sa", "decomp"), sweeps=200, attempts=4)
    outs = []
    for k, workers in enumerate((1, 2)):
        paths = bench.cmd_generate(spec, tmp_path / f"inst{k}")
        rows = bench.cmd_solve(paths, ExperimentSpec(**{**spec.__dict__, "workers": workers}))
        bench.write_results(rows, tmp_path / f"r{k}.csv")
        outs.append(bench.strip_timing((tmp_path / f"r{k}.csv").read_text()).encode())
    inst_same = all(
        (tmp_path / "inst0" / p.name).read_bytes() == p.read_bytes() for p in (tmp_path / "inst1").iterdir()
    )
    ok = outs[0] == outs[1] and inst_same
    record("7", ok, f"rerun CSVs byte-identical without timing ({len(outs[0])} bytes), instance files identical")
    assert ok
