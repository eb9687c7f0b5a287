from __future__ import annotations

import time

from ..qubo import QuboModel, bits_from_index, decode, evaluate
from ._kernels import gray_enumerate, to_csr
from .result import SolveResult

MAX_VARS = 25


def brute_force_qubo(model: QuboModel) -> SolveResult:
    """Exact minimum by Gray-code enumeration of all 2^n bit strings.

    Ties go to the lexicographically smallest bit string (bit 0 first).
    """
    n = model.n_vars
    if n > MAX_VARS:
        raise ValueError(f"brute force limited to {MAX_VARS} variables, model has {n}")
    t0 = time.perf_counter()
    rows, cols, vals = model.arrays
    h, indptr, indices, data = to_csr(n, rows, cols, vals)
    key, _, worst = gray_enumerate(h, indptr, indices, data, float(model.offset), n)
    bits = bits_from_index(int(key), n)
    res = SolveResult(
        "brute",
        bits=bits,
        energy=evaluate(model, bits),
        wall_time=time.perf_counter() - t0,
        evaluations=1 << n,
        max_energy_seen=float(worst),
    )
    if model.instance is not None and model.layout.kind == "full":
        sched, report = decode(model, bits)
        res.schedule, res.feasible, res.makespan = sched, report.feasible, report.makespan
    return res
