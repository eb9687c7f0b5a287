import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import small_instances
from wfqubo.decomposition import (
    DecompositionConfig,
    FrontierState,
    build_sub_qubo,
    encode_local,
    exact_sub_assignment,
    run_decomposition,
    select_subproblem,
    step,
    update_resources,
    write_trace,
)
from wfqubo.generator import GeneratorConfig, generate_instance
from wfqubo.instance import InstanceError, StarvationError, WorkflowInstance, check_schedule
from wfqubo.qubo import decoded_starts, evaluate, evaluate_parts
from wfqubo.solvers import branch_and_bound_schedule, brute_force_qubo, greedy_schedule


def done(inst, jobs, offset=0):
    s = FrontierState.initial(inst)
    return FrontierState(frozenset(jobs), offset, s.remaining)


def test_config_validation():
    with pytest.raises(ValueError):
        DecompositionConfig(0, 2)
    with pytest.raises(ValueError):
        DecompositionConfig(2, 2, sub_solver="quantum")
    assert DecompositionConfig(4, 2).ratio == 2.0


def test_select_initial_canonical(canonical):
    assert select_subproblem(FrontierState.initial(canonical), canonical, 3) == [0, 1, 2]


def test_select_after_first_step(canonical):
    assert select_subproblem(done(canonical, {0, 2}), canonical, 3) == [1, 3, 4]


def test_select_last_job(canonical):
    assert select_subproblem(done(canonical, {0, 1, 2, 3, 4}), canonical, 3) == [5]


def test_select_skips_children_with_outside_parents(canonical):
    # 5 needs 4, which is not reachable within two jobs
    assert select_subproblem(done(canonical, {0, 2, 3}), canonical, 2) == [1, 4]
    assert select_subproblem(done(canonical, {0, 2, 3}), canonical, 5) == [1, 4, 5]


def test_select_corrupt_graph_raises():
    # a cycle leaves no root among the uncompleted jobs
    inst = WorkflowInstance.build([1, 1], [(0, 1), (1, 0)], [2])
    with pytest.raises(InstanceError):
        select_subproblem(FrontierState.initial(inst), inst, 2)


def test_single_job_window_has_one_decision(canonical):
    m = build_sub_qubo(canonical, [5], [9])
    assert m.layout.n_decision == 1
    res = brute_force_qubo(m)
    assert decoded_starts(m, res.bits) == {5: [0]}


def test_first_window_prefers_larger_job(canonical):
    m = build_sub_qubo(canonical, [0, 1, 2], [3, 5])
    res = brute_force_qubo(m)
    assert decoded_starts(m, res.bits) == {0: [0], 2: [1]}
    assert exact_sub_assignment(canonical, [0, 1, 2], [3, 5]) == {0: 0, 2: 1}


def test_child_in_first_slot_is_penalized(canonical):
    m = build_sub_qubo(canonical, [0, 1], [9, 9])
    bits = encode_local(m, {1: 0})
    assert evaluate_parts(m, bits)[1] > 0


def test_pairwise_encoding_drops_job_slacks(canonical):
    a = build_sub_qubo(canonical, [0, 1, 2], [3, 5])
    b = build_sub_qubo(canonical, [0, 1, 2], [3, 5], once_encoding="pairwise")
    assert a.n_vars - b.n_vars == 3
    assert decoded_starts(b, brute_force_qubo(b).bits) == {0: [0], 2: [1]}


def test_unweighted_reward_only_counts_jobs(canonical):
    # with equal weights the earlier-slot tie-break decides
    assert exact_sub_assignment(canonical, [0, 1, 2], [3, 5], weighted_reward=False) == {0: 0, 1: 1}


def test_empty_subset_rejected(canonical):
    with pytest.raises(ValueError):
        build_sub_qubo(canonical, [], [3])


@st.composite
def windows(draw):
    inst = draw(small_instances(max_jobs=3, max_slots=3, max_r=3))
    subset = inst.dag.topological_order()
    n_slots = draw(st.integers(1, 2))
    cap = draw(st.lists(st.integers(0, 4), min_size=n_slots, max_size=n_slots))
    return inst, subset, cap


@settings(max_examples=60, deadline=None)
@given(windows(), st.sampled_from(["slack", "pairwise"]), st.booleans())
def test_exact_sub_solver_matches_brute_minimum(win, enc, weighted):
    inst, subset, cap = win
    m = build_sub_qubo(inst, subset, cap, once_encoding=enc, weighted_reward=weighted)
    if m.n_vars > 20:
        return
    local = exact_sub_assignment(inst, subset, cap, weighted)
    assert evaluate(m, encode_local(m, local)) == brute_force_qubo(m).energy


@settings(max_examples=60, deadline=None)
@given(windows(), st.randoms(use_true_random=False))
def test_sub_constraint_part_never_negative(win, rnd):
    inst, subset, cap = win
    m = build_sub_qubo(inst, subset, cap)
    for _ in range(30):
        bits = [rnd.randint(0, 1) for _ in range(m.n_vars)]
        assert evaluate_parts(m, bits)[1] >= 0


def test_canonical_three_steps(canonical):
    run = run_decomposition(canonical, DecompositionConfig(3, 2))
    assert run.makespan == 5
    assert [sorted(j for j, _ in r["scheduled"]) for r in run.trace] == [[0, 2], [1, 3, 4], [5]]
    assert [r["time_offset"] for r in run.trace] == [0, 2, 4]
    assert 14 <= run.max_sub_qubo_vars <= 20
    assert check_schedule(canonical, run.schedule).feasible


def test_single_remaining_job_goes_first_slot():
    inst = WorkflowInstance.build([2], [], [5, 5])
    state, placed, _ = step(FrontierState.initial(inst), inst, DecompositionConfig(3, 2))
    assert placed == {0: 0} and state.time_offset == 1
    assert run_decomposition(inst).makespan == 1


def test_zero_window_advances_by_one():
    inst = WorkflowInstance.build([2], [], [0, 0, 5])
    state, placed, rec = step(FrontierState.initial(inst), inst, DecompositionConfig(1, 2))
    assert placed == {} and state.time_offset == 1 and rec["scheduled"] == []


def test_starvation_guard():
    inst = WorkflowInstance.build([2], [], [2])
    state = FrontierState(frozenset(), 11, (2,))
    with pytest.raises(StarvationError):
        step(state, inst, DecompositionConfig())


def test_update_resources_identity_is_noop(canonical):
    cfg = DecompositionConfig(3, 2)
    s1, _, _ = step(FrontierState.initial(canonical), canonical, cfg)
    same = update_resources(s1, s1.remaining[s1.time_offset :])
    a, b = s1, same
    while len(a.completed) < canonical.n_jobs:
        a, _, _ = step(a, canonical, cfg)
        b, _, _ = step(b, canonical, cfg)
    assert a.schedule().to_dict() == b.schedule().to_dict()


def test_update_resources_zero_window(canonical):
    cfg = DecompositionConfig(3, 2)
    s1, _, _ = step(FrontierState.initial(canonical), canonical, cfg)
    zeroed = update_resources(s1, [0, 0] + list(s1.remaining[s1.time_offset + 2 :]))
    s2, placed, _ = step(zeroed, canonical, cfg)
    assert placed == {} and s2.time_offset == s1.time_offset + 1
    assert s2.remaining[: s1.time_offset] == s1.remaining[: s1.time_offset]


def test_update_resources_rejects_negative(canonical):
    with pytest.raises(ValueError):
        update_resources(FrontierState.initial(canonical), [1, -1])


def test_capacity_increase_rescues_starving_run():
    # r_max comes from a slot already consumed; later windows are too small
    inst = WorkflowInstance.build([4, 4], [(0, 1)], [4, 3, 3])
    cfg = DecompositionConfig(2, 2)
    state = FrontierState.initial(inst)
    state, placed, _ = step(state, inst, cfg)
    assert placed == {0: 0}
    state = update_resources(state, [0] * 40)
    for _ in range(5):
        state, placed, _ = step(state, inst, cfg)
        assert placed == {}
    state = update_resources(state, [4, 4])
    while len(state.completed) < inst.n_jobs:
        state, _, _ = step(state, inst, cfg)
    assert check_schedule(inst, state.schedule()).feasible


@settings(max_examples=60, deadline=None)
@given(small_instances(max_jobs=5), st.integers(1, 4), st.integers(1, 3), st.sampled_from(["exact", "brute", "sa"]))
def test_decomposition_is_sound_and_dominated(inst, jobs, slots, solver):
    cfg = DecompositionConfig(jobs, slots, sub_solver=solver, sa_sweeps=50, sa_attempts=2)
    if solver == "brute":
        cfg = DecompositionConfig(min(jobs, 2), min(slots, 2), sub_solver=solver)
    run = run_decomposition(inst, cfg)
    assert check_schedule(inst, run.schedule).feasible
    assert run.makespan >= branch_and_bound_schedule(inst).makespan
    offsets = [r["time_offset"] for r in run.trace]
    assert offsets == sorted(set(offsets))


def test_random_ten_job_instances_feasible_and_bounded():
    for seed in range(10):
        inst = generate_instance(GeneratorConfig(10, seed=seed))
        run = run_decomposition(inst, DecompositionConfig(3, 2))
        assert check_schedule(inst, run.schedule).feasible
        assert run.makespan >= branch_and_bound_schedule(inst).makespan


def test_large_window_beats_greedy():
    for seed in range(10):
        inst = generate_instance(GeneratorConfig(8, seed=seed))
        g = greedy_schedule(inst).makespan
        run = run_decomposition(inst, DecompositionConfig(inst.n_jobs, g))
        assert run.makespan <= g


def test_size_one_is_serial_baseline():
    inst = generate_instance(GeneratorConfig(8, seed=4))
    run = run_decomposition(inst, DecompositionConfig(1, 1))
    done_set: set[int] = set()
    t = 0
    expected = {}
    while len(done_set) < inst.n_jobs:
        root = min(j for j in range(inst.n_jobs) if j not in done_set and inst.dag.parents[j] <= done_set)
        if inst.availability_at(t) >= inst.reqs[root]:
            expected[root] = t
            done_set.add(root)
        t += 1
    assert run.schedule.to_dict() == dict(sorted(expected.items()))


def test_trace_jsonl(tmp_path, canonical):
    run = run_decomposition(canonical)
    write_trace(run.trace, tmp_path / "t.jsonl")
    lines = [json.loads(x) for x in (tmp_path / "t.jsonl").read_text().splitlines()]
    assert len(lines) == 3
    assert set(lines[0]) >= {"step", "subset", "sub_qubo_vars", "scheduled", "time_offset"}
    assert lines[1]["scheduled"] == [[3, 2], [1, 3], [4, 3]]
