"""JSON persistence for instances and schedules."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

from .instance import (
    SCHEMA_VERSION,
    InstanceError,
    Schedule,
    WorkflowInstance,
    validate_instance,
)


class SchemaError(InstanceError):
    pass


def instance_to_dict(inst: WorkflowInstance) -> dict[str, Any]:
    return {
        "version": SCHEMA_VERSION,
        "name": inst.name,
        "seed": inst.seed,
        "jobs": [{"id": j.id, "resource": j.resource_req} for j in inst.jobs],
        "edges": [list(e) for e in inst.dag.edges],
        "availability": list(inst.resources.available),
        "horizon": inst.horizon,
    }


def instance_from_dict(data: dict[str, Any], *, validate: bool = True) -> WorkflowInstance:
    if not isinstance(data, dict):
        raise SchemaError("instance document must be a JSON object")
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {data.get('version')!r} (expected {SCHEMA_VERSION})")
    for key in ("jobs", "edges", "availability", "horizon"):
        if key not in data:
            raise SchemaError(f"missing field {key!r}")
    try:
        jobs = sorted(data["jobs"], key=lambda j: j["id"])
        if [j["id"] for j in jobs] != list(range(len(jobs))):
            raise SchemaError("job ids must be 0..N-1")
        inst = WorkflowInstance.build(
            [j["resource"] for j in jobs],
            [tuple(e) for e in data["edges"]],
            data["availability"],
            data["horizon"],
            seed=data.get("seed"),
            name=data.get("name", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed instance: {exc}") from exc
    if validate:
        report = validate_instance(inst)
        if not report.ok:
            raise InstanceError("invalid instance: " + "; ".join(report.violations))
    return inst


def write_instance(inst: WorkflowInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def read_instance(path: str | Path, *, validate: bool = True) -> WorkflowInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data, validate=validate)


def schedule_to_dict(sched: Schedule, seed: int | None = None) -> dict[str, Any]:
    return {
        "version": SCHEMA_VERSION,
        "seed": seed,
        "starts": {str(j): t for j, t in sched.to_dict().items()},
    }


def schedule_from_dict(data: dict[str, Any]) -> Schedule:
    if data.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {data.get('version')!r}")
    try:
        return Schedule({int(j): int(t) for j, t in data["starts"].items()})
    except (KeyError, AttributeError, ValueError) as exc:
        raise SchemaError(f"malformed schedule: {exc}") from exc


def write_schedule(sched: Schedule, path: str | Path, seed: int | None = None) -> None:
    Path(path).write_text(json.dumps(schedule_to_dict(sched, seed), indent=1) + "\n")


def read_schedule(path: str | Path) -> Schedule:
    return schedule_from_dict(json.loads(Path(path).read_text()))


def canonical_instance() -> WorkflowInstance:
    """The bundled six-job example (greedy 7, optimum 5)."""
    text = resources.files("wfqubo.data").joinpath("canonical6.json").read_text()
    return instance_from_dict(json.loads(text))
