"""Exact makespan minimisation by depth-first branch and bound."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

from ..instance import Schedule, WorkflowInstance
from .greedy import greedy_schedule


@dataclass
class BnbResult:
    schedule: Schedule
    makespan: int
    proven: bool
    nodes: int
    wall_time: float


class _Budget(Exception):
    pass


def _priority_topo_order(inst: WorkflowInstance, tails: list[int]) -> list[int]:
    # parents first; among ready jobs take the longest remaining chain, then lower id
    indeg = [len(ps) for ps in inst.dag.parents]
    heap = [(-tails[i], i) for i, d in enumerate(indeg) if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, i = heapq.heappop(heap)
        order.append(i)
        for c in inst.dag.children[i]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (-tails[c], c))
    return order


def branch_and_bound_schedule(
    inst: WorkflowInstance,
    upper_bound: int | None = None,
    *,
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> BnbResult:
    """Minimum-makespan schedule.

    Jobs are branched in a parents-first order and slots tried ascending. The
    incumbent is seeded with the greedy schedule; a node is cut when the
    critical-path bound (earliest feasible start plus longest chain below the
    job) or the remaining-capacity bound cannot beat the incumbent.

    ``upper_bound`` only tightens the search: schedules of makespan >= bound are
    never explored, so if nothing better exists the greedy schedule is returned.
    When ``node_limit`` or ``time_limit`` is exhausted the best incumbent is
    returned with ``proven=False``.
    """
    t0 = time.perf_counter()
    n = inst.n_jobs
    reqs = inst.reqs
    parents = [sorted(ps) for ps in inst.dag.parents]
    tails = inst.dag.tails()
    order = _priority_topo_order(inst, tails)

    best = greedy_schedule(inst)
    best_start = dict(best.start)
    ub = best.makespan
    if upper_bound is not None:
        ub = min(ub, upper_bound)

    horizon = ub
    avail = [inst.availability_at(t) for t in range(horizon)]
    # next_fit[j][t]: first slot >= t whose raw availability admits job j
    next_fit = []
    for j in range(n):
        row = [horizon] * (horizon + 1)
        for t in range(horizon - 1, -1, -1):
            row[t] = t if avail[t] >= reqs[j] else row[t + 1]
        next_fit.append(row)

    def lower_bound(start: list[int]) -> int:
        head = [0] * n
        lb = 0
        for j in order:
            h = 0
            for p in parents[j]:
                h = max(h, head[p] + 1)
            if start[j] >= 0:
                h = start[j]
            else:
                h = next_fit[j][min(h, horizon)]
            head[j] = h
            lb = max(lb, h + tails[j] + 1)
        return lb

    root_lb = lower_bound([-1] * n)
    nodes = 0
    proven = True
    state = {"ub": ub, "start": best_start if best.makespan <= ub else None}
    cap = list(avail)
    start = [-1] * n
    remaining_work = sum(reqs)

    def dfs(k: int, work_left: int) -> None:
        nonlocal nodes
        nodes += 1
        if node_limit is not None and nodes > node_limit:
            raise _Budget
        if time_limit is not None and nodes % 256 == 0 and time.perf_counter() - t0 > time_limit:
            raise _Budget
        if k == n:
            mk = max(start) + 1
            if mk < state["ub"]:
                state["ub"] = mk
                state["start"] = {j: start[j] for j in range(n)}
            return
        if sum(cap[: state["ub"] - 1]) < work_left:
            return
        j = order[k]
        est = max((start[p] + 1 for p in parents[j]), default=0)
        r = reqs[j]
        t = est
        while t + tails[j] + 1 < state["ub"]:
            if cap[t] >= r:
                cap[t] -= r
                start[j] = t
                if lower_bound(start) < state["ub"]:
                    dfs(k + 1, work_left - r)
                start[j] = -1
                cap[t] += r
                if state["ub"] <= root_lb:
                    return
            t += 1

    if root_lb < state["ub"]:
        try:
            dfs(0, remaining_work)
        except _Budget:
            proven = False

    if state["start"] is None:
        # upper_bound was below anything reachable; fall back to greedy
        state["start"] = best_start
    sched = Schedule(state["start"])
    return BnbResult(sched, sched.makespan, proven, nodes, time.perf_counter() - t0)
