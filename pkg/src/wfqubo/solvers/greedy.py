from __future__ import annotations

from ..instance import Schedule, StarvationError, WorkflowInstance


def greedy_schedule(inst: WorkflowInstance, max_slots: int | None = None) -> Schedule:
    """List-schedule the current roots slot by slot.

    In every slot the ready jobs (all parents finished in earlier slots) are
    packed largest-requirement first, ties by lower id, skipping any job that
    no longer fits. Raises StarvationError if jobs remain after ``max_slots``
    slots (default ``10 * n_jobs``).
    """
    n = inst.n_jobs
    limit = 10 * max(n, 1) if max_slots is None else max_slots
    reqs = inst.reqs
    parents = inst.dag.parents
    order = sorted(range(n), key=lambda j: (-reqs[j], j))
    start: dict[int, int] = {}
    done: set[int] = set()
    t = 0
    while len(start) < n:
        if t >= limit:
            raise StarvationError(f"greedy placed {len(start)}/{n} jobs within {limit} slots")
        cap = inst.availability_at(t)
        placed = []
        for j in order:
            if j in start or not parents[j] <= done:
                continue
            if reqs[j] <= cap:
                cap -= reqs[j]
                start[j] = t
                placed.append(j)
        done.update(placed)
        t += 1
    return Schedule(start)
