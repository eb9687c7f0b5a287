"""Workflow instance and schedule data model.

Jobs occupy exactly one time slot each. A job may start in slot ``t`` only if
all of its parents started in strictly earlier slots and the workers it needs
fit into what is left of ``available[t]``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = 1


class InstanceError(ValueError):
    """Raised for malformed instances or schedules."""


class StarvationError(RuntimeError):
    """Raised when no progress can be made within the slot budget."""


@dataclass(frozen=True)
class Job:
    id: int
    resource_req: int

    def __post_init__(self):
        if self.resource_req < 1:
            raise InstanceError(f"job {self.id}: resource_req must be >= 1, got {self.resource_req}")


@dataclass(frozen=True)
class Dag:
    """Parent sets indexed by job id. Children are derived."""

    parents: tuple[frozenset[int], ...]
    children: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kids: list[set[int]] = [set() for _ in self.parents]
        for child, ps in enumerate(self.parents):
            for p in ps:
                if 0 <= p < len(kids):
                    kids[p].add(child)
        object.__setattr__(self, "children", tuple(frozenset(k) for k in kids))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Dag":
        parents: list[set[int]] = [set() for _ in range(n)]
        for p, c in edges:
            if not (0 <= p < n and 0 <= c < n):
                raise InstanceError(f"edge ({p}, {c}) references unknown job")
            parents[c].add(p)
        return cls(tuple(frozenset(ps) for ps in parents))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted((p, c) for c, ps in enumerate(self.parents) for p in ps)

    def find_cycle(self) -> list[int] | None:
        ts = TopologicalSorter({c: set(ps) for c, ps in enumerate(self.parents)})
        try:
            ts.prepare()
        except CycleError as exc:
            return list(exc.args[1])
        return None

    def topological_order(self) -> list[int]:
        """Kahn order, smallest ready id first."""
        indeg = [len(ps) for ps in self.parents]
        ready = sorted(i for i, d in enumerate(indeg) if d == 0)
        order = []
        heapq.heapify(ready)
        while ready:
            i = heapq.heappop(ready)
            order.append(i)
            for c in self.children[i]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != len(self.parents):
            raise InstanceError("dependency graph has a cycle")
        return order

    def tails(self) -> list[int]:
        """Longest path (in edges) from each job down to a sink."""
        tail = [0] * len(self.parents)
        for i in reversed(self.topological_order()):
            if self.children[i]:
                tail[i] = 1 + max(tail[c] for c in self.children[i])
        return tail


@dataclass(frozen=True)
class ResourceProfile:
    available: tuple[int, ...]

    @property
    def r_max(self) -> int:
        return max(self.available, default=0)

    def __len__(self) -> int:
        return len(self.available)


@dataclass(frozen=True)
class WorkflowInstance:
    jobs: tuple[Job, ...]
    dag: Dag
    resources: ResourceProfile
    horizon: int
    seed: int | None = None
    name: str = ""

    @classmethod
    def build(
        cls,
        resource_reqs: Sequence[int],
        edges: Iterable[tuple[int, int]],
        available: Sequence[int],
        horizon: int | None = None,
        *,
        seed: int | None = None,
        name: str = "",
    ) -> "WorkflowInstance":
        jobs = tuple(Job(i, int(r)) for i, r in enumerate(resource_reqs))
        avail = tuple(int(a) for a in available)
        return cls(
            jobs=jobs,
            dag=Dag.from_edges(len(jobs), edges),
            resources=ResourceProfile(avail),
            horizon=len(avail) if horizon is None else int(horizon),
            seed=seed,
            name=name,
        )

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def reqs(self) -> list[int]:
        return [j.resource_req for j in self.jobs]

    @property
    def r_max(self) -> int:
        return self.resources.r_max

    def availability_at(self, t: int) -> int:
        # Past the horizon the full crew (r_max) is assumed available.
        if t < len(self.resources.available):
            return self.resources.available[t]
        return self.r_max

    def with_availability(self, available: Sequence[int]) -> "WorkflowInstance":
        avail = tuple(int(a) for a in available)
        return WorkflowInstance(self.jobs, self.dag, ResourceProfile(avail), len(avail), self.seed, self.name)


@dataclass(frozen=True)
class Schedule:
    start: Mapping[int, int]

    @property
    def makespan(self) -> int:
        return 1 + max(self.start.values()) if self.start else 0

    def to_dict(self) -> dict[int, int]:
        return dict(sorted(self.start.items()))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass
class FeasibilityReport:
    missing: list[int] = field(default_factory=list)
    duplicates: list[int] = field(default_factory=list)
    order_violations: list[tuple[int, int]] = field(default_factory=list)
    resource_overuse: dict[int, int] = field(default_factory=dict)
    makespan: int | None = None

    @property
    def feasible(self) -> bool:
        return not (self.missing or self.duplicates or self.order_violations or self.resource_overuse)

    @property
    def violation_count(self) -> int:
        return (
            len(self.missing)
            + len(self.duplicates)
            + len(self.order_violations)
            + sum(self.resource_overuse.values())
        )


def validate_instance(inst: WorkflowInstance) -> ValidationReport:
    report = ValidationReport()
    n = inst.n_jobs
    if len(inst.dag.parents) != n:
        report.violations.append(f"dag covers {len(inst.dag.parents)} jobs, expected {n}")
    for i, job in enumerate(inst.jobs):
        if job.id != i:
            report.violations.append(f"job at position {i} has id {job.id}")
    for c, ps in enumerate(inst.dag.parents):
        for p in ps:
            if not 0 <= p < n:
                report.violations.append(f"edge ({p}, {c}) references unknown job")
            elif c not in inst.dag.children[p]:
                report.violations.append(f"edge ({p}, {c}) missing from children map")
    cycle = inst.dag.find_cycle()
    if cycle is not None:
        report.violations.append(f"cycle: {' -> '.join(map(str, cycle))}")
    if inst.horizon != len(inst.resources.available):
        report.violations.append(
            f"horizon {inst.horizon} != availability length {len(inst.resources.available)}"
        )
    if any(a < 0 for a in inst.resources.available):
        report.violations.append("negative availability entry")
    for job in inst.jobs:
        if job.resource_req > inst.r_max:
            report.violations.append(
                f"job {job.id} needs {job.resource_req} workers but r_max is {inst.r_max}"
            )
    return report


def check_schedule(inst: WorkflowInstance, sched: Schedule) -> FeasibilityReport:
    n = inst.n_jobs
    unknown = [j for j in sched.start if not 0 <= j < n]
    if unknown:
        raise InstanceError(f"schedule references unknown jobs {sorted(unknown)}")
    report = FeasibilityReport()
    report.missing = [j for j in range(n) if j not in sched.start]
    for c, ps in enumerate(inst.dag.parents):
        if c not in sched.start:
            continue
        for p in sorted(ps):
            if p in sched.start and sched.start[c] <= sched.start[p]:
                report.order_violations.append((p, c))
    used: dict[int, int] = {}
    for j, t in sched.start.items():
        if t < 0:
            raise InstanceError(f"job {j} has negative start slot {t}")
        used[t] = used.get(t, 0) + inst.jobs[j].resource_req
    for t in sorted(used):
        excess = used[t] - inst.availability_at(t)
        if excess > 0:
            report.resource_overuse[t] = excess
    if not report.missing:
        report.makespan = sched.makespan
    return report
