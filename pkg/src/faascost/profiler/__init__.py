"""Scheduler fingerprinting: throttle probe, replay, and inference."""

from faascost.profiler.analyze import SchedulerFingerprint, analyze
from faascost.profiler.events import (
    ProbeConfig,
    ProbeResult,
    ProfilerError,
    ThrottleEvent,
    events_from_csv,
    events_to_csv,
)
from faascost.profiler.probe import probe, replay_probe
from faascost.profiler.reference import (
    PUBLISHED_PLATFORM_SCHEDULERS,
    ReferenceMatch,
    ReferenceSchedParams,
    fingerprint_report,
)

__all__ = [
    "PUBLISHED_PLATFORM_SCHEDULERS",
    "ProbeConfig",
    "ProbeResult",
    "ProfilerError",
    "ReferenceMatch",
    "ReferenceSchedParams",
    "SchedulerFingerprint",
    "ThrottleEvent",
    "analyze",
    "events_from_csv",
    "events_to_csv",
    "fingerprint_report",
    "probe",
    "replay_probe",
]
