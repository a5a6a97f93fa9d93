"""Canonical invocation record and the schema map binding it to trace columns.

The canonical schema is this toolkit's own; real traces bind their column
names and units through :class:`SchemaMap` so the analytics stay
format-agnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

from faascost.billing.model import ResourceAllocation

# Multipliers into canonical units (ms for durations, MB for memory).
DURATION_UNITS = {"us": 0.001, "ms": 1.0, "s": 1000.0}
MEMORY_UNITS = {"bytes": 1.0 / (1024.0 * 1024.0), "kb": 1.0 / 1024.0, "mb": 1.0, "gb": 1024.0}


@dataclass(frozen=True)
class InvocationRecord:
    """One request from a trace.

    ``cpu_usage_avg_vcpus`` is the mean vCPUs consumed over the execution;
    ``mem_usage_mb`` follows whatever convention (peak or mean) the trace
    declares in its schema map.
    """

    function_id: str
    instance_id: str
    arrival_ts_ms: float
    exec_duration_ms: float
    init_duration_ms: float
    is_cold_start: bool
    alloc: ResourceAllocation
    cpu_usage_avg_vcpus: float
    mem_usage_mb: float

    def __post_init__(self) -> None:
        if self.exec_duration_ms < 0 or self.init_duration_ms < 0:
            raise ValueError("durations must be >= 0")
        if self.cpu_usage_avg_vcpus < 0 or self.mem_usage_mb < 0:
            raise ValueError("usage amounts must be >= 0")


#: Canonical fields that must be bound by every schema map.
REQUIRED_FIELDS = (
    "function_id",
    "arrival_ts",
    "exec_duration",
    "alloc_vcpus",
    "alloc_memory_mb",
    "cpu_usage_avg_vcpus",
    "mem_usage",
)

#: Optional fields; ingestion falls back to defaults when unbound.
OPTIONAL_FIELDS = ("instance_id", "init_duration", "is_cold_start")


@dataclass(frozen=True)
class SchemaMap:
    """Binds canonical record fields to trace column names, with units.

    ``columns`` maps canonical field name -> trace column name. Units
    declare what the trace stores; values are converted to canonical units
    (ms, MB) during ingestion. ``memory_usage_semantics`` records whether
    ``mem_usage`` is a peak or a mean; it is carried into report metadata,
    not interpreted.
    """

    columns: Dict[str, str]
    duration_unit: str = "ms"
    timestamp_unit: str = "ms"
    memory_unit: str = "mb"
    memory_usage_semantics: str = "unspecified"
    delimiter: str = ","

    def __post_init__(self) -> None:
        missing = [f for f in REQUIRED_FIELDS if f not in self.columns]
        if missing:
            raise ValueError(f"schema map missing required fields: {missing}")
        unknown = [
            f for f in self.columns if f not in REQUIRED_FIELDS + OPTIONAL_FIELDS
        ]
        if unknown:
            raise ValueError(f"schema map binds unknown fields: {unknown}")
        for unit, table in (
            (self.duration_unit, DURATION_UNITS),
            (self.timestamp_unit, DURATION_UNITS),
            (self.memory_unit, MEMORY_UNITS),
        ):
            if unit not in table:
                raise ValueError(f"unknown unit: {unit!r}")

    def column(self, field_name: str) -> Optional[str]:
        return self.columns.get(field_name)


def default_schema_map() -> SchemaMap:
    """Schema map for traces written in the canonical column layout."""
    return SchemaMap(
        columns={
            "function_id": "function_id",
            "instance_id": "instance_id",
            "arrival_ts": "arrival_ts_ms",
            "exec_duration": "exec_duration_ms",
            "init_duration": "init_duration_ms",
            "is_cold_start": "is_cold_start",
            "alloc_vcpus": "alloc_vcpus",
            "alloc_memory_mb": "alloc_memory_mb",
            "cpu_usage_avg_vcpus": "cpu_usage_avg_vcpus",
            "mem_usage": "mem_usage_mb",
        }
    )
