"""Workflow scheduling with dynamic resources as QUBO, plus classical baselines."""
from .decomposition import DecompositionConfig, run_decomposition
from .generator import GeneratorConfig, generate_instance
from .instance import (
    InstanceError,
    Schedule,
    StarvationError,
    WorkflowInstance,
    check_schedule,
    validate_instance,
)
from .io import canonical_instance, read_instance, write_instance
from .qubo import ObjectiveConfig, PenaltyWeights, build_default_qubo, build_qubo, decode, evaluate, evaluate_parts

__version__ = "0.1.0"

__all__ = [
    "DecompositionConfig",
    "GeneratorConfig",
    "InstanceError",
    "ObjectiveConfig",
    "PenaltyWeights",
    "Schedule",
    "StarvationError",
    "WorkflowInstance",
    "build_default_qubo",
    "build_qubo",
    "canonical_instance",
    "check_schedule",
    "decode",
    "evaluate",
    "evaluate_parts",
    "generate_instance",
    "read_instance",
    "run_decomposition",
    "validate_instance",
    "write_instance",
]
