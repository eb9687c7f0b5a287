from .anneal import SaConfig, simulated_annealing
from .brute import brute_force_qubo
from .exact import BnbResult, branch_and_bound_schedule
from .greedy import greedy_schedule
from .result import SolveResult

__all__ = [
    "BnbResult",
    "SaConfig",
    "SolveResult",
    "branch_and_bound_schedule",
    "brute_force_qubo",
    "greedy_schedule",
    "simulated_annealing",
]
