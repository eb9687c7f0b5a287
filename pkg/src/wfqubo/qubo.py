"""QUBO encoding of workflow scheduling.

Binary ``x[i, t]`` is 1 when job ``i`` starts in slot ``t``. The energy is

    C = objective + beta * one_start + gamma * order + epsilon * resource

with

* objective   = sum_{i, t > R} f(t - R) x[i, t]
* one_start   = sum_i (sum_t x[i, t] - 1)^2
* order       = sum_{i, j in children(i), t2 <= t1} x[i, t1] x[j, t2]
* resource    = sum_t (sum_i r_i x[i, t] + sum_k 2^k s[t, k] - available[t])^2

where ``s[t, k]`` are slack bits turning the capacity inequality into an
equality. Pairs with ``r_i > available[t]`` are dropped before any term is
generated.

Models are stored upper-triangular: ``terms[(i, j)]`` with ``i <= j``, linear
coefficients on the diagonal.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .instance import (
    SCHEMA_VERSION,
    FeasibilityReport,
    InstanceError,
    Schedule,
    WorkflowInstance,
    check_schedule,
)

Number = int | float


def slack_width(d: int) -> int:
    """Number of slack bits needed to absorb a gap of at most ``d``."""
    if d < 0:
        raise ValueError(f"negative slack bound {d}: inequality is unsatisfiable")
    return 1 if d == 0 else int(d).bit_length()


class QuadForm:
    """Mutable upper-triangular accumulator over binary variables."""

    def __init__(self):
        self.terms: dict[tuple[int, int], Number] = {}
        self.offset: Number = 0

    def add(self, i: int, j: int, c: Number) -> None:
        if c == 0:
            return
        key = (i, j) if i <= j else (j, i)
        v = self.terms.get(key, 0) + c
        if v == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = v

    def add_linear(self, i: int, c: Number) -> None:
        self.add(i, i, c)

    def add_squared(self, coeffs: Sequence[tuple[int, Number]], const: Number, scale: Number = 1) -> None:
        """Add ``scale * (sum_k a_k x_k + const)^2`` using x^2 = x."""
        for k, (i, a) in enumerate(coeffs):
            self.add(i, i, scale * (a * a + 2 * a * const))
            for j, b in coeffs[k + 1 :]:
                self.add(i, j, scale * 2 * a * b)
        self.offset += scale * const * const

    def scaled(self, w: Number) -> "QuadForm":
        out = QuadForm()
        if w != 0:
            out.terms = {k: w * v for k, v in self.terms.items()}
            out.offset = w * self.offset
        return out

    def energy(self, bits: Sequence[int]) -> Number:
        e = self.offset
        for (i, j), c in self.terms.items():
            if bits[i] and bits[j]:
                e += c
        return e


@dataclass(frozen=True)
class VariableLayout:
    decision: dict[tuple[int, int], int]
    slack: dict[tuple[int, int], int]
    slot_capacity: tuple[int, ...]
    job_slack: dict[tuple[int, int], int] = field(default_factory=dict)
    slot_offset: int = 0
    n_vars: int = 0
    kind: str = "full"

    @property
    def jobs(self) -> list[int]:
        return sorted({i for i, _ in self.decision} | {i for i, _ in self.job_slack})

    @property
    def total_vars(self) -> int:
        return self.n_vars

    @property
    def n_decision(self) -> int:
        return len(self.decision)

    @property
    def n_slack(self) -> int:
        return len(self.slack) + len(self.job_slack)


@dataclass(frozen=True)
class PenaltyWeights:
    beta: Number = 1
    gamma: Number = 1
    epsilon: Number = 1

    def __post_init__(self):
        if min(self.beta, self.gamma, self.epsilon) < 0:
            raise ValueError("penalty weights must be non-negative")

    @classmethod
    def uniform(cls, a: Number) -> "PenaltyWeights":
        if a <= 0:
            raise ValueError("uniform penalty weight must be positive")
        return cls(a, a, a)

    @property
    def A(self) -> Number | None:
        """Common weight when beta == gamma == epsilon, else None."""
        return self.beta if self.beta == self.gamma == self.epsilon else None


def _identity(d: int) -> int:
    return d


@dataclass(frozen=True)
class ObjectiveConfig:
    expected_runtime: int = 0
    f: Callable[[int], Number] = _identity
    name: str = "linear"

    def __post_init__(self):
        if self.expected_runtime < 0:
            raise ValueError("expected_runtime must be >= 0")
        if self.f(0) < 0:
            raise ValueError("overtime penalty must satisfy f(0) >= 0")

    def cost(self, t: int) -> Number:
        return self.f(t - self.expected_runtime) if t > self.expected_runtime else 0


@dataclass(frozen=True, eq=False)
class QuboModel:
    layout: VariableLayout
    objective: QuadForm
    penalties: dict[str, QuadForm]
    weights: PenaltyWeights
    instance: WorkflowInstance | None = None

    @classmethod
    def from_terms(cls, n_vars: int, terms: Mapping[tuple[int, int], Number], offset: Number = 0) -> "QuboModel":
        """Bare model over ``n_vars`` anonymous bits (no instance attached)."""
        form = QuadForm()
        form.offset = offset
        for (i, j), c in terms.items():
            if not (0 <= i < n_vars and 0 <= j < n_vars):
                raise ValueError(f"term ({i}, {j}) out of range for {n_vars} variables")
            form.add(i, j, c)
        return cls(VariableLayout({}, {}, (), n_vars=n_vars, kind="raw"), form, {}, PenaltyWeights())

    @cached_property
    def _combined(self) -> QuadForm:
        w = {"one_start": self.weights.beta, "order": self.weights.gamma, "resource": self.weights.epsilon}
        out = QuadForm()
        out.offset = self.objective.offset
        for k, v in self.objective.terms.items():
            out.add(*k, v)
        for name, form in self.penalties.items():
            out.offset += w[name] * form.offset
            for k, v in form.terms.items():
                out.add(*k, w[name] * v)
        return out

    @property
    def terms(self) -> dict[tuple[int, int], Number]:
        return self._combined.terms

    @property
    def offset(self) -> Number:
        return self._combined.offset

    @property
    def n_vars(self) -> int:
        return self.layout.n_vars

    @cached_property
    def integral(self) -> bool:
        return all(float(v).is_integer() for v in self.terms.values()) and float(self.offset).is_integer()

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, coeffs) in sorted key order."""
        keys = sorted(self.terms)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        vals = np.array([self.terms[k] for k in keys], dtype=np.float64)
        return rows, cols, vals

    def dense(self) -> np.ndarray:
        q = np.zeros((self.n_vars, self.n_vars))
        rows, cols, vals = self.arrays
        q[rows, cols] = vals
        return q

    def max_abs_coeff(self) -> float:
        _, _, vals = self.arrays
        return float(np.abs(vals).max()) if len(vals) else 0.0


def _check_bits(model: QuboModel, bits: Sequence[int]) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).ravel()
    if b.shape[0] != model.n_vars:
        raise ValueError(f"expected {model.n_vars} bits, got {b.shape[0]}")
    return b


def evaluate(model: QuboModel, bits: Sequence[int]) -> float:
    b = _check_bits(model, bits)
    rows, cols, vals = model.arrays
    on = (b[rows] & b[cols]).astype(bool)
    if model.integral:
        return float(int(model.offset) + int(vals[on].astype(np.int64).sum()))
    return float(model.offset + vals[on].sum())


def evaluate_parts(model: QuboModel, bits: Sequence[int]) -> tuple[float, float]:
    """(objective part, unweighted constraint part Q0).

    With uniform weights A the full energy is ``objective + A * Q0``.
    """
    b = _check_bits(model, bits).tolist()
    q0 = sum(form.energy(b) for form in model.penalties.values())
    return float(model.objective.energy(b)), float(q0)


def build_qubo(
    inst: WorkflowInstance,
    weights: PenaltyWeights,
    obj: ObjectiveConfig | None = None,
) -> QuboModel:
    obj = obj or ObjectiveConfig()
    m = inst.horizon
    if m <= 0:
        raise InstanceError("horizon must be positive to build a QUBO")
    avail = [inst.availability_at(t) for t in range(m)]
    reqs = inst.reqs

    idx = 0
    decision: dict[tuple[int, int], int] = {}
    for i, r in enumerate(reqs):
        slots = [t for t in range(m) if r <= avail[t]]
        if not slots:
            raise InstanceError(f"job {i} (needs {r}) fits in no slot of the horizon")
        for t in slots:
            decision[(i, t)] = idx
            idx += 1
    slack: dict[tuple[int, int], int] = {}
    for t in range(m):
        for k in range(slack_width(avail[t])):
            slack[(t, k)] = idx
            idx += 1
    layout = VariableLayout(decision, slack, tuple(avail), n_vars=idx)

    by_job: dict[int, list[tuple[int, int]]] = {i: [] for i in range(inst.n_jobs)}
    by_slot: dict[int, list[tuple[int, int]]] = {t: [] for t in range(m)}
    for (i, t), v in decision.items():
        by_job[i].append((t, v))
        by_slot[t].append((i, v))

    objective = QuadForm()
    for (i, t), v in decision.items():
        objective.add_linear(v, obj.cost(t))

    one_start = QuadForm()
    for i in range(inst.n_jobs):
        one_start.add_squared([(v, 1) for _, v in by_job[i]], -1)

    order = QuadForm()
    for i in range(inst.n_jobs):
        for j in sorted(inst.dag.children[i]):
            for t1, vi in by_job[i]:
                for t2, vj in by_job[j]:
                    if t2 <= t1:
                        order.add(vi, vj, 1)

    resource = QuadForm()
    for t in range(m):
        coeffs = [(v, reqs[i]) for i, v in by_slot[t]]
        coeffs += [(slack[(t, k)], 2**k) for k in range(slack_width(avail[t]))]
        resource.add_squared(coeffs, -avail[t])

    return QuboModel(
        layout,
        objective,
        {"one_start": one_start, "order": order, "resource": resource},
        weights,
        inst,
    )


def encode_assignment(model: QuboModel, starts: Mapping[int, int]) -> np.ndarray:
    """Bits for a job -> slot assignment (slots in model coordinates), slacks filled in.

    Jobs absent from ``starts`` get no decision bit. Each slack register is set
    to the unused capacity (or unused start allowance for per-job slacks).
    """
    lay = model.layout
    bits = np.zeros(model.n_vars, dtype=np.int8)
    if model.instance is None:
        raise ValueError("model carries no source instance")
    used = [0] * len(lay.slot_capacity)
    reqs = model.instance.reqs
    for j, t in starts.items():
        key = (j, t - lay.slot_offset)
        if key not in lay.decision:
            raise ValueError(f"job {j} at slot {t} has no variable in this model")
        bits[lay.decision[key]] = 1
        used[key[1]] += reqs[j]
    for t, cap in enumerate(lay.slot_capacity):
        gap = cap - used[t]
        for k in range(slack_width(cap)):
            bits[lay.slack[(t, k)]] = (gap >> k) & 1 if gap > 0 else 0
    for (j, k), v in lay.job_slack.items():
        bits[v] = 0 if j in starts else (1 >> k) & 1
    return bits


def encode_schedule(model: QuboModel, sched: Schedule) -> np.ndarray:
    return encode_assignment(model, sched.start)


def decoded_starts(model: QuboModel, bits: Sequence[int]) -> dict[int, list[int]]:
    """job -> list of (global) slots whose decision bit is set."""
    b = _check_bits(model, bits)
    out: dict[int, list[int]] = {}
    for (i, t), v in sorted(model.layout.decision.items()):
        if b[v]:
            out.setdefault(i, []).append(t + model.layout.slot_offset)
    return out


def decode(model: QuboModel, bits: Sequence[int]) -> tuple[Schedule, FeasibilityReport]:
    """Map decision bits back to a schedule and re-check it on the source instance.

    Jobs started more than once are reported as duplicates and left out of the
    returned (then partial) schedule.
    """
    if model.instance is None:
        raise ValueError("model carries no source instance")
    starts = decoded_starts(model, bits)
    single = {j: ts[0] for j, ts in starts.items() if len(ts) == 1}
    dups = sorted(j for j, ts in starts.items() if len(ts) > 1)
    sched = Schedule(single)
    report = check_schedule(model.instance, sched)
    report.duplicates = dups
    report.missing = [j for j in report.missing if j not in dups]
    if report.duplicates:
        report.makespan = None
    return sched, report


def objective_value(sched: Schedule, obj: ObjectiveConfig | None = None) -> Number:
    obj = obj or ObjectiveConfig()
    return sum(obj.cost(t) for t in sched.start.values())


def penalty_weight_bound(inst: WorkflowInstance, obj: ObjectiveConfig | None, feasible: Schedule) -> Number:
    """Uniform weight A = objective(feasible) + 1.

    Any infeasible bit string pays at least A in penalties, which already
    exceeds the objective of ``feasible``, so every global minimum is feasible.
    """
    report = check_schedule(inst, feasible)
    if not report.feasible:
        raise InstanceError("penalty bound needs a feasible schedule")
    late = [j for j, t in feasible.start.items() if t >= inst.horizon]
    if late:
        raise InstanceError(f"jobs {late} start beyond the horizon; schedule is not representable")
    return objective_value(feasible, obj) + 1


def build_default_qubo(inst: WorkflowInstance, obj: ObjectiveConfig | None = None) -> QuboModel:
    """QUBO with uniform weight A from the greedy schedule."""
    from .solvers.greedy import greedy_schedule

    a = penalty_weight_bound(inst, obj, greedy_schedule(inst))
    return build_qubo(inst, PenaltyWeights.uniform(a), obj)


def normalized_cost(energy: float, c_min: float, c_max: float) -> float:
    if not c_max > c_min:
        raise ValueError(f"need c_max > c_min, got c_min={c_min}, c_max={c_max}")
    x = (energy - c_min) / (c_max - c_min)
    if x < 0 or x > 1:
        warnings.warn(f"energy {energy} outside [{c_min}, {c_max}]; clamping", stacklevel=2)
        x = min(1.0, max(0.0, x))
    return float(x)


def model_to_dict(model: QuboModel) -> dict[str, Any]:
    lay = model.layout
    rows, cols, vals = model.arrays
    coeff: Callable[[float], Number] = (lambda v: int(v)) if model.integral else float
    return {
        "version": SCHEMA_VERSION,
        "n_vars": model.n_vars,
        "offset": coeff(model.offset),
        "terms": [[int(i), int(j), coeff(v)] for i, j, v in zip(rows, cols, vals)],
        "weights": {"beta": model.weights.beta, "gamma": model.weights.gamma, "epsilon": model.weights.epsilon},
        "layout": {
            "decision": [[i, t, v] for (i, t), v in sorted(lay.decision.items(), key=lambda kv: kv[1])],
            "slack": [[t, k, v] for (t, k), v in sorted(lay.slack.items(), key=lambda kv: kv[1])],
            "job_slack": [[i, k, v] for (i, k), v in sorted(lay.job_slack.items(), key=lambda kv: kv[1])],
            "slot_capacity": list(lay.slot_capacity),
            "slot_offset": lay.slot_offset,
            "kind": lay.kind,
        },
        "instance": model.instance.name if model.instance is not None else None,
    }


def model_from_dict(data: dict[str, Any], instance: WorkflowInstance | None = None) -> QuboModel:
    """Rebuild a model from its interchange form.

    Penalty/objective split is not serialized; the reloaded model keeps all
    terms in its objective part.
    """
    if data.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported QUBO schema version {data.get('version')!r}")
    lay = data["layout"]
    layout = VariableLayout(
        decision={(i, t): v for i, t, v in lay["decision"]},
        slack={(t, k): v for t, k, v in lay["slack"]},
        slot_capacity=tuple(lay["slot_capacity"]),
        job_slack={(i, k): v for i, k, v in lay.get("job_slack", [])},
        slot_offset=lay.get("slot_offset", 0),
        n_vars=data["n_vars"],
        kind=lay.get("kind", "full"),
    )
    form = QuadForm()
    form.offset = data["offset"]
    for i, j, c in data["terms"]:
        form.add(i, j, c)
    w = data.get("weights", {})
    return QuboModel(layout, form, {}, PenaltyWeights(**w) if w else PenaltyWeights(), instance)


def bits_from_index(k: int, n: int) -> np.ndarray:
    """Bit string for enumeration index ``k``; bit 0 is the most significant."""
    return np.array([(k >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int8)


__all__ = [
    "ObjectiveConfig",
    "PenaltyWeights",
    "QuadForm",
    "QuboModel",
    "VariableLayout",
    "build_default_qubo",
    "build_qubo",
    "decode",
    "encode_assignment",
    "encode_schedule",
    "evaluate",
    "evaluate_parts",
    "model_from_dict",
    "model_to_dict",
    "normalized_cost",
    "objective_value",
    "penalty_weight_bound",
    "slack_width",
]

