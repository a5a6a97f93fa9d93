"""Streaming CSV ingestion for invocation traces.

Reads plain or gzip-compressed CSV, binds columns through a SchemaMap,
normalizes units, and yields InvocationRecord objects one at a time so
multi-gigabyte traces never need to fit in memory.
"""

from __future__ import annotations

import csv
import gzip
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Optional, Union

from .records import (
    DURATION_UNITS,
    MEMORY_UNITS,
    OPTIONAL_FIELDS,
    REQUIRED_FIELDS,
    InvocationRecord,
    SchemaMap,
)
from ..billing.model import allocation

_GZIP_MAGIC = b"\x1f\x8b"
_TRUTHY = {"1", "true", "t", "yes", "y"}
_FALSY = {"0", "false", "f", "no", "n", ""}


@dataclass
class IngestStats:
    """Counters filled in while the record generator is consumed."""

    rows_read: int = 0
    records_yielded: int = 0
    malformed_skipped: int = 0
    zero_cpu_filtered: int = 0
    notes: list = field(default_factory=list)


def _open_source(source: Union[str, Path, IO[bytes]]) -> IO[str]:
    if isinstance(source, (str, Path)):
        raw: IO[bytes] = open(source, "rb")
    else:
        raw = source
    head = raw.read(2)
    if hasattr(raw, "seek"):
        raw.seek(0)
    else:  # pragma: no cover - non-seekable streams are not used in tests
        raw = io.BytesIO(head + raw.read())
    if head == _GZIP_MAGIC:
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8", newline="")
    return io.TextIOWrapper(raw, encoding="utf-8", newline="")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUTHY:
        return True
    if lowered in _FALSY:
        return False
    raise ValueError(f"unparseable boolean: {text!r}")


def ingest_trace(
    source: Union[str, Path, IO[bytes]],
    schema_map: Optional[SchemaMap] = None,
    *,
    drop_zero_cpu: bool = False,
    stats: Optional[IngestStats] = None,
) -> Iterator[InvocationRecord]:
    """Yield InvocationRecords from a CSV trace.

    Malformed rows (unparseable numbers, negative durations or usage) are
    counted in ``stats.malformed_skipped`` and skipped. A missing required
    column or an unknown unit raises immediately. With ``drop_zero_cpu``
    set, rows whose average CPU usage is exactly zero are filtered out and
    counted, mirroring the metering exclusion for requests that never ran.
    """
    if schema_map is None:
        from .records import default_schema_map

        schema_map = default_schema_map()
    if stats is None:
        stats = IngestStats()

    dur_factor = DURATION_UNITS[schema_map.duration_unit]
    ts_factor = DURATION_UNITS[schema_map.timestamp_unit]
    mem_factor = MEMORY_UNITS[schema_map.memory_unit]

    text = _open_source(source)
    try:
        reader = csv.DictReader(text, delimiter=schema_map.delimiter)
        header = reader.fieldnames
        if header is None:
            raise ValueError("empty trace: no header row")
        for logical in REQUIRED_FIELDS:
            column = schema_map.column(logical)
            if column not in header:
                raise ValueError(
                    f"required column {column!r} (for {logical}) not in header"
                )
        for logical in OPTIONAL_FIELDS:
            column = schema_map.columns.get(logical)
            if column is not None and column not in header:
                raise ValueError(
                    f"mapped column {column!r} (for {logical}) not in header"
                )

        has_instance = "instance_id" in schema_map.columns
        has_init = "init_duration" in schema_map.columns
        has_cold = "is_cold_start" in schema_map.columns

        for row in reader:
            stats.rows_read += 1
            try:
                exec_ms = float(row[schema_map.column("exec_duration")]) * dur_factor
                arrival = float(row[schema_map.column("arrival_ts")]) * ts_factor
                vcpus = float(row[schema_map.column("alloc_vcpus")])
                mem_mb = float(row[schema_map.column("alloc_memory_mb")]) * mem_factor
                cpu_avg = float(row[schema_map.column("cpu_usage_avg_vcpus")])
                mem_usage = float(row[schema_map.column("mem_usage")]) * mem_factor
                init_ms = 0.0
                if has_init:
                    cell = row[schema_map.column("init_duration")].strip()
                    init_ms = float(cell) * dur_factor if cell else 0.0
                if has_cold:
                    cold = _parse_bool(row[schema_map.column("is_cold_start")])
                else:
                    cold = init_ms > 0.0
                instance = (
                    row[schema_map.column("instance_id")].strip()
                    if has_instance
                    else ""
                )
                record = InvocationRecord(
                    function_id=row[schema_map.column("function_id")].strip(),
                    instance_id=instance,
                    arrival_ts_ms=arrival,
                    exec_duration_ms=exec_ms,
                    init_duration_ms=init_ms,
                    is_cold_start=cold,
                    alloc=allocation(vcpus=vcpus, memory_mb=mem_mb),
                    cpu_usage_avg_vcpus=cpu_avg,
                    mem_usage_mb=mem_usage,
                )
            except (ValueError, KeyError, TypeError):
                stats.malformed_skipped += 1
                continue
            if drop_zero_cpu and record.cpu_usage_avg_vcpus == 0.0:
                stats.zero_cpu_filtered += 1
                continue
            stats.records_yielded += 1
            yield record
    finally:
        text.close()
