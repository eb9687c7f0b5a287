"""Random workflow instances.

Graphs grow one node at a time. When the k-th node (1-based) is added it takes
every earlier node as a parent independently with probability ``f(k)``, where
``f`` is the chosen fall-off function. Resource requirements are uniform
integers in ``[resource_lo, resource_hi]``.

Two availability policies are provided:

``sampled`` (default)
    Each slot is idle (0 workers) with probability ``idle_prob``; otherwise it
    offers exactly the requirement of a uniformly chosen job of the instance.
    Scarce, fluctuating crews make the greedy makespan grow at roughly 2.5-2.7
    slots per job.
``ample``
    Each slot draws uniformly from ``[max r_i, max(max r_i, avail_hi)]`` so any
    single job can start anywhere.

The horizon is the greedy makespan on the drawn profile (times
``horizon_multiplier``); the profile is cut to that length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .instance import InstanceError, StarvationError, WorkflowInstance

FALLOFFS: dict[str, Callable[[int], float]] = {
    "inverse": lambda k: 1.0 / k,
    "inverse-square": lambda k: 1.0 / k**2,
    "inverse-sqrt": lambda k: 1.0 / math.sqrt(k),
}
POLICIES = ("sampled", "ample")


@dataclass(frozen=True)
class GeneratorConfig:
    n_jobs: int
    falloff: str = "inverse"
    resource_lo: int = 1
    resource_hi: int = 10
    seed: int = 0
    policy: str = "sampled"
    idle_prob: float = 0.45
    avail_hi: int = 10
    horizon_multiplier: float = 1.0

    def __post_init__(self):
        if self.n_jobs < 1:
            raise InstanceError(f"n_jobs must be >= 1, got {self.n_jobs}")
        if not 1 <= self.resource_lo <= self.resource_hi:
            raise InstanceError("need 1 <= resource_lo <= resource_hi")
        if self.falloff not in FALLOFFS:
            raise InstanceError(f"unknown falloff {self.falloff!r}; choose from {sorted(FALLOFFS)}")
        if self.policy not in POLICIES:
            raise InstanceError(f"unknown availability policy {self.policy!r}")
        if not 0.0 <= self.idle_prob < 1.0:
            raise InstanceError("idle_prob must be in [0, 1)")
        if self.horizon_multiplier < 1.0:
            raise InstanceError("horizon_multiplier must be >= 1")


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(master, *keys)``."""
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def random_parents(n: int, falloff: str, rng: np.random.Generator) -> list[list[int]]:
    f = FALLOFFS[falloff]
    parents: list[list[int]] = [[]]
    for k in range(2, n + 1):
        draws = rng.random(k - 1)
        parents.append([j for j in range(k - 1) if draws[j] < f(k)])
    return parents[:n]


def _draw_availability(cfg: GeneratorConfig, reqs: np.ndarray, length: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.policy == "sampled":
        crew = reqs[rng.integers(0, len(reqs), size=length)]
        idle = rng.random(length) < cfg.idle_prob
        return np.where(idle, 0, crew)
    lo = int(reqs.max())
    return rng.integers(lo, max(lo, cfg.avail_hi) + 1, size=length)


def generate_instance(cfg: GeneratorConfig, max_redraws: int = 1000) -> WorkflowInstance:
    from .solvers.greedy import greedy_schedule

    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_jobs
    parents = random_parents(n, cfg.falloff, rng)
    reqs = rng.integers(cfg.resource_lo, cfg.resource_hi + 1, size=n)
    edges = [(p, c) for c, ps in enumerate(parents) for p in ps]
    length = 10 * n
    name = f"n{n}-{cfg.falloff}-{cfg.seed}"
    for _ in range(max_redraws):
        avail = _draw_availability(cfg, reqs, length, rng)
        draft = WorkflowInstance.build(reqs.tolist(), edges, avail.tolist(), seed=cfg.seed, name=name)
        try:
            makespan = greedy_schedule(draft, max_slots=length).makespan
        except StarvationError:
            continue
        horizon = math.ceil(makespan * cfg.horizon_multiplier)
        while len(avail) < horizon:
            avail = np.concatenate([avail, _draw_availability(cfg, reqs, length, rng)])
        return WorkflowInstance.build(reqs.tolist(), edges, avail[:horizon].tolist(), seed=cfg.seed, name=name)
    raise StarvationError(f"no schedulable availability profile after {max_redraws} draws")


def horizon_estimate(inst: WorkflowInstance) -> int:
    """Greedy makespan, used as the slot budget for QUBO models."""
    from .solvers.greedy import greedy_schedule

    return greedy_schedule(inst).makespan


def fit_horizon(inst: WorkflowInstance) -> WorkflowInstance:
    """Copy of ``inst`` whose profile is cut or padded (with r_max) to the greedy makespan."""
    m = horizon_estimate(inst)
    return inst.with_availability([inst.availability_at(t) for t in range(m)])
