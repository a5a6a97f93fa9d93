"""Trace analytics: inflation, utilization correlation, cold starts, rounding.

All analyses stream over an iterable of InvocationRecord in one pass with
O(1) or O(instances) state. Arithmetic runs in compensated floats for
throughput; the money engine keeps its exact decimal path separately.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .records import InvocationRecord
from .sketch import QuantileSketch
from ..billing import engine as billing_engine
from ..billing.model import (
    MEMORY_GB,
    VCPU,
    CpuProportionalToMemory,
    FixedCombos,
    PlatformBillingConfig,
)


class _Sum:
    """Neumaier compensated summation."""

    __slots__ = ("_total", "_comp")

    def __init__(self) -> None:
        self._total = 0.0
        self._comp = 0.0

    def add(self, x: float) -> None:
        t = self._total + x
        if abs(self._total) >= abs(x):
            self._comp += (self._total - t) + x
        else:
            self._comp += (x - t) + self._total
        self._total = t

    def value(self) -> float:
        return self._total + self._comp


def _ceil_to_f(amount: float, granularity: float) -> float:
    if amount <= 0.0:
        return 0.0
    return math.ceil(amount / granularity) * granularity


def _billable_ms_f(
    raw_ms: float, granularity_ms: Optional[float], cutoff_ms: float
) -> float:
    raw_ms = max(raw_ms, cutoff_ms)
    if raw_ms == 0.0:
        return 0.0
    if granularity_ms is None:
        raise ValueError("platform does not document a time granularity")
    return _ceil_to_f(raw_ms, granularity_ms)


MappingT = Union[str, Callable[[InvocationRecord], Tuple[float, float]]]


def _make_mapper(
    config: PlatformBillingConfig, mapping: MappingT
) -> Callable[[InvocationRecord], Tuple[float, float]]:
    """Return record -> (vcpus, memory_mb) under the platform's knobs."""
    if callable(mapping):
        return mapping
    if mapping == "direct":
        return lambda r: (float(r.alloc.vcpus), float(r.alloc.memory_mb))
    if mapping == "normalize":
        cache: Dict[Tuple[float, float], Tuple[float, float]] = {}

        def mapper(r: InvocationRecord) -> Tuple[float, float]:
            key = (r.alloc.vcpus, r.alloc.memory_mb)
            hit = cache.get(key)
            if hit is None:
                norm = billing_engine.normalize_allocation(r.alloc, config)
                hit = (float(norm.vcpus), float(norm.memory_mb))
                cache[key] = hit
            return hit

        return mapper
    raise ValueError(f"unknown mapping: {mapping!r}")


@dataclass
class InflationReport:
    platform: str
    mapping: str
    n: int
    actual_vcpu_s_total: float
    actual_gb_s_total: float
    billable_vcpu_s_total: Optional[float]
    billable_gb_s_total: Optional[float]
    mean_inflation_cpu: Optional[float]
    mean_inflation_mem: Optional[float]
    vcpu_s_sketch: Optional[QuantileSketch]
    gb_s_sketch: Optional[QuantileSketch]
    flags: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        def pct(sk: Optional[QuantileSketch]) -> Optional[dict]:
            if sk is None or len(sk) == 0:
                return None
            return {
                "mean": sk.mean(),
                "p50": sk.query(0.5),
                "p90": sk.query(0.9),
                "p99": sk.query(0.99),
            }

        return {
            "platform": self.platform,
            "mapping": self.mapping,
            "n": self.n,
            "actual_vcpu_s_total": self.actual_vcpu_s_total,
            "actual_gb_s_total": self.actual_gb_s_total,
            "billable_vcpu_s_total": self.billable_vcpu_s_total,
            "billable_gb_s_total": self.billable_gb_s_total,
            "mean_inflation_cpu": self.mean_inflation_cpu,
            "mean_inflation_mem": self.mean_inflation_mem,
            "billable_vcpu_s": pct(self.vcpu_s_sketch),
            "billable_gb_s": pct(self.gb_s_sketch),
            "flags": list(self.flags),
        }


def inflation_analysis(
    records: Iterable[InvocationRecord],
    config: PlatformBillingConfig,
    *,
    mapping: MappingT = "normalize",
    sketch_eps: float = 0.005,
) -> InflationReport:
    """Aggregate billable-to-actual resource inflation under a platform.

    Mean inflation is the ratio of total billable to total actual
    resource-seconds, so heavy requests weigh in proportionally. Resources
    the platform does not bill are reported as None. Per-request billable
    distributions go into quantile sketches.
    """
    mapper = _make_mapper(config, mapping)
    mapping_name = mapping if isinstance(mapping, str) else "custom"

    alloc_vcpu = config.alloc_spec(VCPU)
    alloc_mem = config.alloc_spec(MEMORY_GB)
    usage_vcpu = config.usage_spec(VCPU)
    usage_mem = config.usage_spec(MEMORY_GB)

    gran = float(config.time_granularity_ms) if config.time_granularity_ms is not None else None
    cutoff = float(config.time_min_cutoff_ms)

    n = 0
    actual_cpu = _Sum()
    actual_mem = _Sum()
    bill_cpu = _Sum()
    bill_mem = _Sum()
    # CPU is billed when priced directly or when the knob coupling ties a
    # vCPU share to every billed memory size (proportional and combo plans).
    bills_cpu = (
        alloc_vcpu is not None
        or usage_vcpu is not None
        or isinstance(config.knob_coupling, (CpuProportionalToMemory, FixedCombos))
        or config.billable_time_kind == "cpu_time_only"
    )
    bills_mem = alloc_mem is not None or usage_mem is not None
    cpu_sketch = QuantileSketch(sketch_eps) if bills_cpu else None
    mem_sketch = QuantileSketch(sketch_eps) if bills_mem else None

    for record in records:
        n += 1
        vcpus, mem_mb = mapper(record)
        mem_gb = mem_mb / 1024.0
        exec_s = record.exec_duration_ms / 1000.0
        cpu_ms = record.cpu_usage_avg_vcpus * record.exec_duration_ms

        if config.billable_time_kind == "cpu_time_only":
            raw_ms = cpu_ms
        elif config.billable_time_kind == "turnaround":
            raw_ms = record.exec_duration_ms + record.init_duration_ms
        else:
            raw_ms = record.exec_duration_ms
        billable_s = _billable_ms_f(raw_ms, gran, cutoff) / 1000.0

        actual_cpu.add(cpu_ms / 1000.0)
        actual_mem.add(record.mem_usage_mb / 1024.0 * exec_s)

        if bills_cpu:
            if usage_vcpu is not None:
                g = float(usage_vcpu.granularity)
                if usage_vcpu.billing_basis == "per_billable_second":
                    vcpu_s = _ceil_to_f(record.cpu_usage_avg_vcpus, g) * billable_s
                else:
                    vcpu_s = _ceil_to_f(cpu_ms, g) / 1000.0
            else:
                billed_vcpus = vcpus
                if alloc_vcpu is not None:
                    billed_vcpus = _ceil_to_f(vcpus, float(alloc_vcpu.granularity))
                vcpu_s = billed_vcpus * billable_s
            bill_cpu.add(vcpu_s)
            cpu_sketch.insert(vcpu_s)

        if bills_mem:
            if usage_mem is not None:
                g = float(usage_mem.granularity)
                rounded = _ceil_to_f(record.mem_usage_mb / 1024.0, g)
                if usage_mem.billing_basis == "per_billable_second":
                    gb_s = rounded * billable_s
                else:
                    # absolute basis: amount is charged once, taken as GB-s
                    gb_s = rounded
            else:
                gb_s = _ceil_to_f(mem_gb, float(alloc_mem.granularity)) * billable_s
            bill_mem.add(gb_s)
            mem_sketch.insert(gb_s)

    if n == 0:
        raise ValueError("no records")

    flags: List[str] = []

    def ratio(bill: _Sum, actual: _Sum, label: str, billed: bool) -> Optional[float]:
        if not billed:
            return None
        a = actual.value()
        if a <= 0.0:
            flags.append(f"{label}: zero actual usage, inflation undefined")
            return None
        r = bill.value() / a
        if r < 1.0:
            flags.append(f"{label} < 1: billables below measured usage")
        return r

    infl_cpu = ratio(bill_cpu, actual_cpu, "mean_inflation_cpu", bills_cpu)
    infl_mem = ratio(bill_mem, actual_mem, "mean_inflation_mem", bills_mem)

    return InflationReport(
        platform=config.name,
        mapping=mapping_name,
        n=n,
        actual_vcpu_s_total=actual_cpu.value(),
        actual_gb_s_total=actual_mem.value(),
        billable_vcpu_s_total=bill_cpu.value() if bills_cpu else None,
        billable_gb_s_total=bill_mem.value() if bills_mem else None,
        mean_inflation_cpu=infl_cpu,
        mean_inflation_mem=infl_mem,
        vcpu_s_sketch=cpu_sketch,
        gb_s_sketch=mem_sketch,
        flags=flags,
    )


@dataclass
class CorrelationResult:
    pearson_r: float
    n: int
    skipped: int
    scatter: List[Tuple[float, float]]
    seed: int

    def as_dict(self) -> dict:
        return {
            "pearson_r": self.pearson_r,
            "n": self.n,
            "skipped": self.skipped,
            "scatter_points": len(self.scatter),
            "seed": self.seed,
        }


def utilization_correlation(
    records: Iterable[InvocationRecord],
    *,
    max_scatter: int = 100_000,
    seed: int = 0,
) -> CorrelationResult:
    """Pearson correlation between CPU and memory utilization fractions.

    Utilization is usage divided by allocation per record. The correlation
    uses exact one-pass sums; a seeded reservoir keeps at most
    ``max_scatter`` points for plotting so memory stays bounded.
    """
    n = 0
    skipped = 0
    sx, sy, sxx, syy, sxy = _Sum(), _Sum(), _Sum(), _Sum(), _Sum()
    reservoir: List[Tuple[float, float]] = []
    rng = random.Random(seed)

    for record in records:
        vcpus = float(record.alloc.vcpus)
        mem_mb = float(record.alloc.memory_mb)
        if vcpus <= 0.0 or mem_mb <= 0.0:
            skipped += 1
            continue
        x = record.cpu_usage_avg_vcpus / vcpus
        y = record.mem_usage_mb / mem_mb
        n += 1
        sx.add(x)
        sy.add(y)
        sxx.add(x * x)
        syy.add(y * y)
        sxy.add(x * y)
        if len(reservoir) < max_scatter:
            reservoir.append((x, y))
        else:
            j = rng.randrange(n)
            if j < max_scatter:
                reservoir[j] = (x, y)

    if n < 2:
        raise ValueError("need at least two records with positive allocations")
    var_x = n * sxx.value() - sx.value() ** 2
    var_y = n * syy.value() - sy.value() ** 2
    if var_x <= 0.0 or var_y <= 0.0:
        raise ValueError("zero variance in utilization, correlation undefined")
    r = (n * sxy.value() - sx.value() * sy.value()) / math.sqrt(var_x * var_y)
    return CorrelationResult(
        pearson_r=r, n=n, skipped=skipped, scatter=reservoir, seed=seed
    )


@dataclass(frozen=True)
class ColdStartDiff:
    instance_key: str
    function_id: str
    init_vcpu_s: float
    init_gb_s: float
    subsequent_vcpu_s: float
    subsequent_gb_s: float

    @property
    def diff_vcpu_s(self) -> float:
        return self.subsequent_vcpu_s - self.init_vcpu_s

    @property
    def diff_gb_s(self) -> float:
        return self.subsequent_gb_s - self.init_gb_s


@dataclass
class ColdStartReport:
    n_records: int
    n_instances: int
    n_cold_instances: int
    n_warm_only_instances: int
    n_zero_init: int
    fraction_nonpositive: Optional[float]
    diff_vcpu_s_sketch: QuantileSketch
    diff_gb_s_sketch: QuantileSketch
    diffs: Optional[List[ColdStartDiff]]
    flags: List[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {
            "n_records": self.n_records,
            "n_instances": self.n_instances,
            "n_cold_instances": self.n_cold_instances,
            "n_warm_only_instances": self.n_warm_only_instances,
            "n_zero_init": self.n_zero_init,
            "fraction_nonpositive": self.fraction_nonpositive,
            "flags": list(self.flags),
        }
        if len(self.diff_vcpu_s_sketch) > 0:
            out["diff_vcpu_s"] = {
                "mean": self.diff_vcpu_s_sketch.mean(),
                "p50": self.diff_vcpu_s_sketch.query(0.5),
            }
        return out


class _InstanceState:
    __slots__ = ("function_id", "cold_first", "init_vcpu_s", "init_gb_s",
                 "sub_vcpu_s", "sub_gb_s")

    def __init__(self, function_id: str, cold_first: bool,
                 init_vcpu_s: float, init_gb_s: float) -> None:
        self.function_id = function_id
        self.cold_first = cold_first
        self.init_vcpu_s = init_vcpu_s
        self.init_gb_s = init_gb_s
        self.sub_vcpu_s = _Sum()
        self.sub_gb_s = _Sum()


def cold_start_differential(
    records: Iterable[InvocationRecord],
    *,
    session_gap_ms: float = 900_000.0,
    sketch_eps: float = 0.005,
    collect: bool = False,
) -> ColdStartReport:
    """Per-instance cold-start billables versus execution billables.

    For each instance whose first observed record is a cold start, the
    initialization billables (allocation times init duration) are compared
    with the execution billables of every request the instance serves,
    including the cold request's own execution. Both sides use raw
    wall-clock allocation-seconds so the comparison is not skewed by any
    platform's rounding. Records without an instance_id fall back to
    per-function sessions split at cold starts or arrival gaps above
    ``session_gap_ms``.
    """
    instances: Dict[str, _InstanceState] = {}
    session_last: Dict[str, float] = {}
    session_idx: Dict[str, int] = {}
    n_records = 0

    for record in records:
        n_records += 1
        if record.instance_id:
            key = record.instance_id
        else:
            fid = record.function_id
            last = session_last.get(fid)
            if (
                last is None
                or record.is_cold_start
                or record.arrival_ts_ms - last > session_gap_ms
            ):
                session_idx[fid] = session_idx.get(fid, -1) + 1
            session_last[fid] = record.arrival_ts_ms
            key = f"{fid}#s{session_idx[fid]}"

        vcpus = float(record.alloc.vcpus)
        mem_gb = float(record.alloc.memory_mb) / 1024.0
        state = instances.get(key)
        if state is None:
            init_s = record.init_duration_ms / 1000.0
            state = _InstanceState(
                record.function_id,
                record.is_cold_start,
                vcpus * init_s,
                mem_gb * init_s,
            )
            instances[key] = state
        exec_s = record.exec_duration_ms / 1000.0
        state.sub_vcpu_s.add(vcpus * exec_s)
        state.sub_gb_s.add(mem_gb * exec_s)

    if n_records == 0:
        raise ValueError("no records")

    diff_cpu_sketch = QuantileSketch(sketch_eps)
    diff_gb_sketch = QuantileSketch(sketch_eps)
    diffs: Optional[List[ColdStartDiff]] = [] if collect else None
    n_cold = 0
    n_warm_only = 0
    n_zero_init = 0
    n_nonpositive = 0

    for key, state in instances.items():
        if not state.cold_first:
            n_warm_only += 1
            continue
        n_cold += 1
        if state.init_vcpu_s == 0.0 and state.init_gb_s == 0.0:
            n_zero_init += 1
        d = ColdStartDiff(
            instance_key=key,
            function_id=state.function_id,
            init_vcpu_s=state.init_vcpu_s,
            init_gb_s=state.init_gb_s,
            subsequent_vcpu_s=state.sub_vcpu_s.value(),
            subsequent_gb_s=state.sub_gb_s.value(),
        )
        diff_cpu_sketch.insert(d.diff_vcpu_s)
        diff_gb_sketch.insert(d.diff_gb_s)
        if d.diff_vcpu_s <= 0.0 and d.diff_gb_s <= 0.0:
            n_nonpositive += 1
        if diffs is not None:
            diffs.append(d)

    flags: List[str] = []
    if n_cold == 0:
        flags.append("no cold-start instances observed")
        fraction = None
    else:
        fraction = n_nonpositive / n_cold
    if n_zero_init:
        flags.append(f"{n_zero_init} cold instances report zero init duration")

    return ColdStartReport(
        n_records=n_records,
        n_instances=len(instances),
        n_cold_instances=n_cold,
        n_warm_only_instances=n_warm_only,
        n_zero_init=n_zero_init,
        fraction_nonpositive=fraction,
        diff_vcpu_s_sketch=diff_cpu_sketch,
        diff_gb_s_sketch=diff_gb_sketch,
        diffs=diffs,
        flags=flags,
    )


@dataclass(frozen=True)
class RoundingPolicy:
    """A (time granularity, cutoff, memory granularity) rounding rule."""

    name: str
    time_granularity_ms: float
    time_min_cutoff_ms: float = 0.0
    mem_granularity_gb: Optional[float] = None

    def __post_init__(self) -> None:
        if self.time_granularity_ms <= 0:
            raise ValueError("time granularity must be positive")
        if self.time_min_cutoff_ms < 0:
            raise ValueError("cutoff must be nonnegative")
        if self.mem_granularity_gb is not None and self.mem_granularity_gb <= 0:
            raise ValueError("memory granularity must be positive")


@dataclass
class RoundingUpStats:
    policy: RoundingPolicy
    n: int
    n_skipped_short: int
    mean_time_roundup_ms: float
    mean_mem_roundup_gb_s: Optional[float]

    def as_dict(self) -> dict:
        return {
            "policy": self.policy.name,
            "n": self.n,
            "n_skipped_short": self.n_skipped_short,
            "mean_time_roundup_ms": self.mean_time_roundup_ms,
            "mean_mem_roundup_gb_s": self.mean_mem_roundup_gb_s,
        }


def rounding_up_stats(
    records: Iterable[InvocationRecord],
    policies: Sequence[RoundingPolicy],
    *,
    min_exec_ms: float = 1.0,
) -> List[RoundingUpStats]:
    """Mean rounded-up time and memory per policy, one pass over records.

    Requests shorter than ``min_exec_ms`` are excluded (sub-granularity
    noise dominates them). Time roundup is billable minus raw execution
    time. Memory roundup isolates the size-granularity effect on consumed
    memory, weighted by raw execution seconds, so it is independent of the
    time rounding reported next to it.
    """
    if not policies:
        raise ValueError("no policies given")
    time_sums = [_Sum() for _ in policies]
    mem_sums = [_Sum() for _ in policies]
    n = 0
    n_short = 0

    for record in records:
        if record.exec_duration_ms < min_exec_ms:
            n_short += 1
            continue
        n += 1
        exec_ms = record.exec_duration_ms
        exec_s = exec_ms / 1000.0
        mem_gb = record.mem_usage_mb / 1024.0
        for i, pol in enumerate(policies):
            billable = _billable_ms_f(
                exec_ms, pol.time_granularity_ms, pol.time_min_cutoff_ms
            )
            time_sums[i].add(billable - exec_ms)
            if pol.mem_granularity_gb is not None:
                rounded = _ceil_to_f(mem_gb, pol.mem_granularity_gb)
                mem_sums[i].add((rounded - mem_gb) * exec_s)

    if n == 0:
        raise ValueError("no records at or above the execution-time floor")

    out: List[RoundingUpStats] = []
    for i, pol in enumerate(policies):
        out.append(
            RoundingUpStats(
                policy=pol,
                n=n,
                n_skipped_short=n_short,
                mean_time_roundup_ms=time_sums[i].value() / n,
                mean_mem_roundup_gb_s=(
                    mem_sums[i].value() / n if pol.mem_granularity_gb is not None else None
                ),
            )
        )
    return out
