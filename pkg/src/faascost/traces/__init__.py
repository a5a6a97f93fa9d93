"""Invocation-trace ingestion and billing analytics."""

from faascost.traces.analysis import (
    ColdStartDiff,
    ColdStartReport,
    CorrelationResult,
    InflationReport,
    RoundingPolicy,
    RoundingUpStats,
    cold_start_differential,
    inflation_analysis,
    rounding_up_stats,
    utilization_correlation,
)
from faascost.traces.ingest import IngestStats, ingest_trace
from faascost.traces.records import InvocationRecord, SchemaMap, default_schema_map
from faascost.traces.sketch import QuantileSketch
from faascost.traces.synthetic import generate_synthetic_trace

__all__ = [
    "ColdStartDiff",
    "ColdStartReport",
    "CorrelationResult",
    "InflationReport",
    "IngestStats",
    "InvocationRecord",
    "QuantileSketch",
    "RoundingPolicy",
    "RoundingUpStats",
    "SchemaMap",
    "cold_start_differential",
    "default_schema_map",
    "generate_synthetic_trace",
    "inflation_analysis",
    "ingest_trace",
    "rounding_up_stats",
    "utilization_correlation",
]
