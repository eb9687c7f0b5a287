"""Export the scheduling problem as a binary program in CPLEX LP syntax."""
from __future__ import annotations

from pathlib import Path

from .instance import InstanceError, WorkflowInstance
from .qubo import ObjectiveConfig

_WRAP = 200


def _var(i: int, t: int) -> str:
    return f"x_{i}_{t}"


def _fmt(c) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def _linear(terms: list[tuple[float, str]]) -> list[str]:
    parts = []
    for k, (c, name) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = _fmt(abs(c))
        body = name if mag == "1" else f"{mag} {name}"
        parts.append(("- " if sign == "-" else "") + body if k == 0 else f"{sign} {body}")
    lines, cur = [], ""
    for p in parts:
        if cur and len(cur) + len(p) + 1 > _WRAP:
            lines.append(cur)
            cur = "   " + p
        else:
            cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def render_lp(inst: WorkflowInstance, obj: ObjectiveConfig | None = None) -> str:
    """LP text: one start per job, precedence, per-slot capacity, start-time cost.

    Precedence is stated on start times: sum_t t*x[c,t] - sum_t t*x[p,t] >= 1.
    """
    obj = obj or ObjectiveConfig()
    m = inst.horizon
    reqs = inst.reqs
    slots = {i: [t for t in range(m) if reqs[i] <= inst.availability_at(t)] for i in range(inst.n_jobs)}
    for i, ts in slots.items():
        if not ts:
            raise InstanceError(f"job {i} fits in no slot of the horizon")

    out = [f"\\ workflow schedule {inst.name or 'instance'}: {inst.n_jobs} jobs, {m} slots", "Minimize"]
    cost = [(obj.cost(t), _var(i, t)) for i in range(inst.n_jobs) for t in slots[i] if obj.cost(t) != 0]
    if not cost:
        cost = [(0, _var(0, slots[0][0]))]
    out += [" obj: " + ln if k == 0 else " " + ln for k, ln in enumerate(_linear(cost))]
    out.append("Subject To")

    def emit(name: str, terms, rhs: str) -> None:
        lines = _linear(terms)
        lines[-1] += f" {rhs}"
        out.append(f" {name}: {lines[0]}")
        out.extend(" " + ln for ln in lines[1:])

    for i in range(inst.n_jobs):
        emit(f"once_{i}", [(1, _var(i, t)) for t in slots[i]], "= 1")
    for p, c in inst.dag.edges:
        terms = [(t, _var(c, t)) for t in slots[c] if t] + [(-t, _var(p, t)) for t in slots[p] if t]
        if not terms:
            # both jobs can only start in slot 0: infeasible, state it explicitly
            terms = [(1, _var(c, slots[c][0]))]
            emit(f"prec_{p}_{c}", terms, ">= 2")
            continue
        emit(f"prec_{p}_{c}", terms, ">= 1")
    for t in range(m):
        terms = [(reqs[i], _var(i, t)) for i in range(inst.n_jobs) if t in slots[i]]
        if terms:
            emit(f"cap_{t}", terms, f"<= {inst.availability_at(t)}")
    out.append("Binary")
    names = [_var(i, t) for i in range(inst.n_jobs) for t in slots[i]]
    for k in range(0, len(names), 10):
        out.append(" " + " ".join(names[k : k + 10]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(inst: WorkflowInstance, obj: ObjectiveConfig | None, path: str | Path) -> None:
    Path(path).write_text(render_lp(inst, obj))
