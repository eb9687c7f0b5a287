from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..instance import Schedule


@dataclass
class SolveResult:
    solver: str
    bits: np.ndarray | None = None
    energy: float | None = None
    schedule: Schedule | None = None
    makespan: int | None = None
    feasible: bool = False
    wall_time: float = 0.0
    evaluations: int = 0
    seed: int | None = None
    max_energy_seen: float | None = None
    info: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "solver": self.solver,
            "bits": None if self.bits is None else "".join(map(str, self.bits.tolist())),
            "energy": self.energy,
            "starts": None if self.schedule is None else {str(k): v for k, v in self.schedule.to_dict().items()},
            "makespan": self.makespan,
            "feasible": self.feasible,
            "wall_time": self.wall_time,
            "evaluations": self.evaluations,
            "seed": self.seed,
            "max_energy_seen": self.max_energy_seen,
            "info": self.info,
        }
