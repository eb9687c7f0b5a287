"""Greedy decomposition into small windowed sub-problems.

Each step takes the current roots plus a few of their closest descendants,
builds a QUBO over those jobs and a short window of slots starting at the
current time offset, solves it, commits whatever got scheduled, and moves the
offset past the last slot that was used.

Inside a window every job may start at most once, a child may only start after
its in-window parent, and slot capacities hold. Scheduling a job earns
``S * w_i`` and costs its local slot index; ``S`` is large enough that the slot
tie-break can never outweigh one extra unit of ``w``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .instance import InstanceError, Schedule, StarvationError, WorkflowInstance
from .qubo import PenaltyWeights, QuadForm, QuboModel, VariableLayout, decoded_starts, encode_assignment, slack_width

SUB_SOLVERS = ("exact", "brute", "sa")
ONCE_ENCODINGS = ("slack", "pairwise")


@dataclass(frozen=True)
class DecompositionConfig:
    jobs_per_sub: int = 3
    slots_per_sub: int = 2
    sub_solver: str = "exact"
    weighted_reward: bool = True
    once_encoding: str = "slack"
    sa_sweeps: int = 1000
    sa_attempts: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.jobs_per_sub < 1 or self.slots_per_sub < 1:
            raise ValueError("jobs_per_sub and slots_per_sub must be >= 1")
        if self.sub_solver not in SUB_SOLVERS:
            raise ValueError(f"unknown sub-solver {self.sub_solver!r}; choose from {SUB_SOLVERS}")
        if self.once_encoding not in ONCE_ENCODINGS:
            raise ValueError(f"unknown once-encoding {self.once_encoding!r}")

    @property
    def ratio(self) -> float:
        return self.jobs_per_sub / self.slots_per_sub


@dataclass(frozen=True)
class FrontierState:
    completed: frozenset[int]
    time_offset: int
    remaining: tuple[int, ...]
    starts: tuple[tuple[int, int], ...] = ()
    steps: int = 0

    @classmethod
    def initial(cls, inst: WorkflowInstance) -> "FrontierState":
        return cls(frozenset(), 0, tuple(inst.resources.available))

    def capacity(self, inst: WorkflowInstance, t: int) -> int:
        return self.remaining[t] if t < len(self.remaining) else inst.r_max

    def schedule(self) -> Schedule:
        return Schedule(dict(self.starts))


def select_subproblem(state: FrontierState, inst: WorkflowInstance, jobs_per_sub: int) -> list[int]:
    """Roots first (by id), then breadth-first layers of descendants.

    A descendant is taken only once all of its parents are either completed or
    already taken, so the subset is closed under uncompleted ancestry.
    """
    n = inst.n_jobs
    done = state.completed
    if len(done) >= n:
        raise ValueError("all jobs are already completed")
    parents = inst.dag.parents
    roots = [j for j in range(n) if j not in done and parents[j] <= done]
    if not roots:
        raise InstanceError("no schedulable root although jobs remain; dependency graph is corrupt")
    chosen = roots[:jobs_per_sub]
    taken = set(chosen)
    layer = chosen
    while layer and len(chosen) < jobs_per_sub:
        cands = sorted({c for j in layer for c in inst.dag.children[j]} - taken - done)
        nxt = []
        for c in cands:
            if len(chosen) >= jobs_per_sub:
                break
            if parents[c] <= done | taken:
                chosen.append(c)
                taken.add(c)
                nxt.append(c)
        layer = nxt
    return chosen


def _weights(inst: WorkflowInstance, subset: Sequence[int], weighted: bool) -> dict[int, int]:
    return {i: inst.jobs[i].resource_req if weighted else 1 for i in subset}


def build_sub_qubo(
    inst: WorkflowInstance,
    subset: Sequence[int],
    capacity: Sequence[int],
    *,
    slot_offset: int = 0,
    weighted_reward: bool = True,
    once_encoding: str = "slack",
) -> QuboModel:
    """Windowed QUBO for ``subset`` over slots with the given free capacity.

    Parents of subset jobs must be either completed or inside the subset. The
    one-start penalty of a job with c in-window children is scaled by
    (1 + n_slots * c); that keeps the constraint part non-negative even when a
    parent is started twice and the order term turns negative.
    """
    if not subset:
        raise ValueError("empty subset")
    if once_encoding not in ONCE_ENCODINGS:
        raise ValueError(f"unknown once-encoding {once_encoding!r}")
    n_slots = len(capacity)
    reqs = inst.reqs
    members = set(subset)
    w = _weights(inst, subset, weighted_reward)
    scale = len(subset) * n_slots + 1
    big_a = scale * n_slots * sum(w.values()) + 1

    idx = 0
    decision: dict[tuple[int, int], int] = {}
    for i in subset:
        for t in range(n_slots):
            if reqs[i] <= capacity[t]:
                decision[(i, t)] = idx
                idx += 1
    job_slack: dict[tuple[int, int], int] = {}
    if once_encoding == "slack":
        for i in subset:
            job_slack[(i, 0)] = idx
            idx += 1
    slack: dict[tuple[int, int], int] = {}
    for t in range(n_slots):
        for k in range(slack_width(capacity[t])):
            slack[(t, k)] = idx
            idx += 1
    layout = VariableLayout(
        decision, slack, tuple(capacity), job_slack=job_slack, slot_offset=slot_offset, n_vars=idx, kind="sub"
    )

    by_job = {i: [(t, decision[(i, t)]) for t in range(n_slots) if (i, t) in decision] for i in subset}
    in_kids = {i: sorted(c for c in inst.dag.children[i] if c in members) for i in subset}

    objective = QuadForm()
    for (i, t), v in decision.items():
        objective.add_linear(v, -scale * w[i] + t)

    once = QuadForm()
    for i in subset:
        mult = 1 + n_slots * len(in_kids[i])
        xs = [(v, 1) for _, v in by_job[i]]
        if once_encoding == "slack":
            once.add_squared(xs + [(job_slack[(i, 0)], 1)], -1, scale=mult)
        else:
            for a in range(len(xs)):
                for b in range(a + 1, len(xs)):
                    once.add(xs[a][0], xs[b][0], mult)

    order = QuadForm()
    for i in subset:
        for j in in_kids[i]:
            for t1, vj in by_job[j]:
                order.add_linear(vj, 1)
                for t2, vi in by_job[i]:
                    if t2 < t1:
                        order.add(vj, vi, -1)

    resource = QuadForm()
    by_slot: dict[int, list[tuple[int, int]]] = {t: [] for t in range(n_slots)}
    for (i, t), v in decision.items():
        by_slot[t].append((v, reqs[i]))
    for t in range(n_slots):
        coeffs = by_slot[t] + [(slack[(t, k)], 2**k) for k in range(slack_width(capacity[t]))]
        resource.add_squared(coeffs, -capacity[t])

    return QuboModel(
        layout,
        objective,
        {"one_start": once, "order": order, "resource": resource},
        PenaltyWeights.uniform(big_a),
        inst,
    )


def exact_sub_assignment(
    inst: WorkflowInstance,
    subset: Sequence[int],
    capacity: Sequence[int],
    weighted_reward: bool = True,
) -> dict[int, int]:
    """Best feasible local placement (job -> local slot) by depth-first search.

    Maximizes sum of (S * w_i - slot) over placed jobs, which is exactly the
    negated sub-QUBO energy of a feasible assignment. Expects ``subset`` in
    parents-first order, as produced by select_subproblem.
    """
    n_slots = len(capacity)
    reqs = inst.reqs
    members = set(subset)
    w = _weights(inst, subset, weighted_reward)
    scale = len(subset) * n_slots + 1
    order = list(subset)
    in_parents = [[p for p in inst.dag.parents[i] if p in members] for i in order]
    gain = [scale * w[i] for i in order]
    suffix = [0] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + gain[k]
    cap = list(capacity)
    place: dict[int, int] = {}
    best = {"value": 0, "place": {}}

    def dfs(k: int, value: int) -> None:
        if value > best["value"]:
            best["value"], best["place"] = value, dict(place)
        if k == len(order):
            return
        if value + suffix[k] <= best["value"]:
            return
        i = order[k]
        est = 0
        for p in in_parents[k]:
            if p not in place:
                est = n_slots
                break
            est = max(est, place[p] + 1)
        for t in range(est, n_slots):
            if cap[t] >= reqs[i]:
                cap[t] -= reqs[i]
                place[i] = t
                dfs(k + 1, value + gain[k] - t)
                del place[i]
                cap[t] += reqs[i]
        dfs(k + 1, value)

    dfs(0, 0)
    return best["place"]


def sanitize(
    inst: WorkflowInstance,
    state: FrontierState,
    subset: Sequence[int],
    local: dict[int, list[int]],
    capacity: Sequence[int],
) -> dict[int, int]:
    """Keep only placements that are sound on their own.

    Jobs started more than once are dropped, then placements are accepted slot
    by slot (ties by subset order) if every parent is completed or accepted at
    an earlier slot and the slot still has room.
    """
    pos = {j: k for k, j in enumerate(subset)}
    single = sorted(((ts[0], pos[j], j) for j, ts in local.items() if len(ts) == 1 and j in pos))
    cap = list(capacity)
    kept: dict[int, int] = {}
    reqs = inst.reqs
    for t, _, j in single:
        ok = all(p in state.completed or (p in kept and kept[p] < t) for p in inst.dag.parents[j])
        if ok and cap[t] >= reqs[j]:
            cap[t] -= reqs[j]
            kept[j] = t
    return kept


def _solve_window(
    inst: WorkflowInstance, subset: list[int], capacity: list[int], cfg: DecompositionConfig, offset: int
) -> tuple[dict[int, int], int, dict[str, Any]]:
    model = build_sub_qubo(
        inst,
        subset,
        capacity,
        slot_offset=offset,
        weighted_reward=cfg.weighted_reward,
        once_encoding=cfg.once_encoding,
    )
    info: dict[str, Any] = {}
    if cfg.sub_solver == "exact":
        local = exact_sub_assignment(inst, subset, capacity, cfg.weighted_reward)
        return local, model.n_vars, info
    if cfg.sub_solver == "brute":
        from .solvers.brute import brute_force_qubo

        res = brute_force_qubo(model)
    else:
        from .generator import derive_seed
        from .solvers.anneal import SaConfig, simulated_annealing

        sa = SaConfig(cfg.sa_sweeps, cfg.sa_attempts, seed=derive_seed(cfg.seed, offset))
        res = simulated_annealing(model, sa)
    info["energy"] = res.energy
    starts = {j: [t - offset for t in ts] for j, ts in decoded_starts(model, res.bits).items()}
    return starts, model.n_vars, info


def step(
    state: FrontierState, inst: WorkflowInstance, cfg: DecompositionConfig
) -> tuple[FrontierState, dict[int, int], dict[str, Any]]:
    """Solve one window; returns (new state, committed global starts, trace record)."""
    n = inst.n_jobs
    if len(state.completed) >= n:
        raise ValueError("all jobs are already completed")
    if state.time_offset > 10 * n:
        raise StarvationError(f"time offset {state.time_offset} exceeds 10*N = {10 * n}")
    off = state.time_offset
    subset = select_subproblem(state, inst, cfg.jobs_per_sub)
    capacity = [state.capacity(inst, off + t) for t in range(cfg.slots_per_sub)]
    raw, n_vars, info = _solve_window(inst, subset, capacity, cfg, off)
    if cfg.sub_solver == "exact":
        local = raw
    else:
        local = sanitize(inst, state, subset, raw, capacity)

    remaining = list(state.remaining)
    need = off + cfg.slots_per_sub
    if len(remaining) < need:
        remaining += [inst.r_max] * (need - len(remaining))
    for j, t in local.items():
        remaining[off + t] -= inst.jobs[j].resource_req
    advance = max(local.values()) + 1 if local else 1
    placed = {j: off + t for j, t in sorted(local.items())}
    new = FrontierState(
        completed=state.completed | frozenset(placed),
        time_offset=off + advance,
        remaining=tuple(remaining),
        starts=state.starts + tuple(sorted(placed.items())),
        steps=state.steps + 1,
    )
    record = {
        "step": state.steps,
        "subset": subset,
        "sub_qubo_vars": n_vars,
        "scheduled": [[j, t] for j, t in sorted(placed.items(), key=lambda kv: (kv[1], kv[0]))],
        "time_offset": off,
        **info,
    }
    return new, placed, record


def update_resources(state: FrontierState, available: Iterable[int]) -> FrontierState:
    """Replace the availability from the current time offset onward."""
    tail = [int(a) for a in available]
    if any(a < 0 for a in tail):
        raise ValueError("availability must be non-negative")
    head = list(state.remaining[: state.time_offset])
    head += [0] * (state.time_offset - len(head))
    return replace(state, remaining=tuple(head + tail))


@dataclass
class DecompositionRun:
    schedule: Schedule
    trace: list[dict[str, Any]] = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return self.schedule.makespan

    @property
    def max_sub_qubo_vars(self) -> int:
        return max((r["sub_qubo_vars"] for r in self.trace), default=0)


def run_decomposition(inst: WorkflowInstance, cfg: DecompositionConfig | None = None) -> DecompositionRun:
    cfg = cfg or DecompositionConfig()
    state = FrontierState.initial(inst)
    run = DecompositionRun(Schedule({}))
    while len(state.completed) < inst.n_jobs:
        state, _, record = step(state, inst, cfg)
        run.trace.append(record)
    run.schedule = state.schedule()
    return run


def write_trace(records: Iterable[dict[str, Any]], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def encode_local(model: QuboModel, local: dict[int, int]):
    """Bits of a local placement (job -> window slot) in a sub-QUBO."""
    return encode_assignment(model, {j: t + model.layout.slot_offset for j, t in local.items()})
