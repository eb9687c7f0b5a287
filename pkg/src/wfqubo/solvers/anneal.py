from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ..generator import derive_seed
from ..qubo import QuboModel, decode, evaluate
from ._kernels import anneal, to_csr
from .result import SolveResult


@dataclass(frozen=True)
class SaConfig:
    sweeps: int = 1000
    attempts: int = 20
    seed: int = 0
    t_hot: float | None = None
    t_cold: float = 0.01

    def __post_init__(self):
        if self.sweeps < 1 or self.attempts < 1:
            raise ValueError("sweeps and attempts must be >= 1")
        if self.t_cold <= 0:
            raise ValueError("t_cold must be positive")
        if self.t_hot is not None and self.t_hot <= self.t_cold:
            raise ValueError("t_hot must exceed t_cold")

    def temperatures(self, model: QuboModel) -> np.ndarray:
        hot = self.t_hot if self.t_hot is not None else max(model.max_abs_coeff(), 2 * self.t_cold)
        return np.linspace(hot, self.t_cold, self.sweeps)


def attempt_seed(master: int, k: int) -> int:
    return derive_seed(master, k) % 2**32


def flip_delta(model: QuboModel, bits, i: int) -> float:
    """Energy change from flipping bit ``i`` (same rule the annealer uses)."""
    b = np.asarray(bits, dtype=np.int64)
    rows, cols, vals = model.arrays
    lin = vals[(rows == i) & (cols == i)].sum()
    mask = (rows == i) ^ (cols == i)
    other = np.where(rows[mask] == i, cols[mask], rows[mask])
    local = lin + (vals[mask] * b[other]).sum()
    return float(local if b[i] == 0 else -local)


def simulated_annealing(model: QuboModel, cfg: SaConfig | None = None) -> SolveResult:
    """Single-flip Metropolis annealing with a linear temperature ramp.

    Each attempt starts from a random state, sweeps all variables in a fresh
    random order per sweep, and keeps its best end-of-sweep state. Attempt k is
    seeded from (cfg.seed, k) alone, so adding attempts never changes earlier
    ones. The best attempt wins; ties keep the lexicographically smallest bits.
    """
    cfg = cfg or SaConfig()
    t0 = time.perf_counter()
    n = model.n_vars
    rows, cols, vals = model.arrays
    h, indptr, indices, data = to_csr(n, rows, cols, vals)
    temps = cfg.temperatures(model)
    best_bits = None
    best_e = np.inf
    worst = -np.inf
    flips = 0
    for k in range(cfg.attempts):
        x, e, w, f = anneal(h, indptr, indices, data, float(model.offset), temps, attempt_seed(cfg.seed, k))
        flips += f
        worst = max(worst, w)
        if e < best_e or (e == best_e and x.tobytes() < best_bits.tobytes()):
            best_e, best_bits = e, x.copy()
    res = SolveResult(
        "sa",
        bits=best_bits,
        energy=evaluate(model, best_bits),
        wall_time=time.perf_counter() - t0,
        evaluations=cfg.sweeps * cfg.attempts * n,
        seed=cfg.seed,
        max_energy_seen=float(worst),
        info={"sweeps": cfg.sweeps, "attempts": cfg.attempts, "t_hot": float(temps[0]), "t_cold": cfg.t_cold, "flips": int(flips)},
    )
    if model.instance is not None and model.layout.kind == "full":
        sched, report = decode(model, best_bits)
        res.schedule, res.feasible, res.makespan = sched, report.feasible, report.makespan
    return res
