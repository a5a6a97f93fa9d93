"""Cost engine: allocation normalization, billable time, and invoice math.

``compute_cost`` accepts any record object exposing the invocation-record
protocol (``exec_duration_ms``, ``init_duration_ms``, ``alloc``,
``cpu_usage_avg_vcpus``, ``mem_usage_mb``); see
:class:`faascost.traces.records.InvocationRecord`.
"""

from __future__ import annotations

import decimal
from decimal import Decimal
from typing import Optional

from faascost.billing.model import (
    MEMORY_GB,
    VCPU,
    AllocResourceSpec,
    BillingError,
    CostBreakdown,
    CpuProportionalToMemory,
    FixedCombos,
    IndependentKnobs,
    MissingGranularityError,
    MissingPriceError,
    PlatformBillingConfig,
    RatioConstrained,
    ResourceAllocation,
    UnpricedResourceError,
    UsageResourceSpec,
)
from faascost.money import CONTEXT, Number, ceil_to, dec

_MS_PER_S = Decimal(1000)
_MB_PER_GB = Decimal(1024)

# Derived vCPU counts are floor-quantized here so that re-normalizing an
# already-normalized allocation reproduces it exactly.
_VCPU_QUANTUM = Decimal("1e-12")

_RATIO_FIX_LIMIT = 100


def normalize_allocation(
    requested: ResourceAllocation, config: PlatformBillingConfig
) -> ResourceAllocation:
    """Map a requested allocation to what the platform would actually grant.

    Whatever the coupling rule, the result never has less of either
    resource than requested (requests beyond 12 fractional digits are not
    representable on the platform knob grids modeled here).
    """
    with decimal.localcontext(CONTEXT):
        coupling = config.knob_coupling
        if isinstance(coupling, IndependentKnobs):
            return requested
        if isinstance(coupling, CpuProportionalToMemory):
            return _normalize_proportional(requested, coupling)
        if isinstance(coupling, FixedCombos):
            return _normalize_combos(requested, coupling)
        if isinstance(coupling, RatioConstrained):
            return _normalize_ratio(requested, coupling)
    raise BillingError(f"unknown knob coupling: {coupling!r}")


def _normalize_proportional(
    requested: ResourceAllocation, coupling: CpuProportionalToMemory
) -> ResourceAllocation:
    # Memory is the real knob. If the vCPU request implies more memory than
    # was asked for, raise memory first, then derive vCPUs from memory.
    mem = max(requested.memory_mb, requested.vcpus * coupling.mem_per_vcpu_mb)
    vcpus = (mem / coupling.mem_per_vcpu_mb).quantize(
        _VCPU_QUANTUM, rounding=decimal.ROUND_FLOOR
    )
    return ResourceAllocation(vcpus, mem, requested.extras)


def _normalize_combos(
    requested: ResourceAllocation, coupling: FixedCombos
) -> ResourceAllocation:
    for vcpu, mem in coupling.combos:  # sorted by memory ascending
        if mem >= requested.memory_mb and vcpu >= requested.vcpus:
            return ResourceAllocation(vcpu, mem, requested.extras)
    raise BillingError("allocation exceeds platform maximum")


def _normalize_ratio(
    requested: ResourceAllocation, coupling: RatioConstrained
) -> ResourceAllocation:
    vcpus = ceil_to(requested.vcpus, coupling.cpu_step) if requested.vcpus else Decimal(0)
    mem = ceil_to(requested.memory_mb, coupling.mem_step_mb) if requested.memory_mb else Decimal(0)
    if vcpus == 0 and mem == 0:
        return ResourceAllocation(Decimal(0), Decimal(0), requested.extras)
    for _ in range(_RATIO_FIX_LIMIT):
        mem_gb = mem / _MB_PER_GB
        if vcpus > 0 and (mem_gb == 0 or vcpus / mem_gb > coupling.max_ratio):
            # Too much CPU per GB: raise memory to the next feasible step.
            mem = ceil_to(vcpus / coupling.max_ratio * _MB_PER_GB, coupling.mem_step_mb)
        elif vcpus / mem_gb < coupling.min_ratio:
            # Too little CPU per GB: raise vCPUs (memory is never lowered).
            vcpus = ceil_to(coupling.min_ratio * mem_gb, coupling.cpu_step)
        else:
            return ResourceAllocation(vcpus, mem, requested.extras)
    raise BillingError("cannot satisfy ratio constraints with these steps")


def billable_time(
    raw_execution_ms: Number, init_ms: Number, config: PlatformBillingConfig
) -> Decimal:
    """Billable wall-clock (or CPU) time in ms: cutoff first, then rounding.

    For the ``cpu_time_only`` kind the caller passes consumed CPU time as
    ``raw_execution_ms``; ``init_ms`` is ignored.  The minimum cutoff is
    applied before granularity rounding (documented cutoffs are multiples
    of the granularity, so the order is observationally safe).
    """
    with decimal.localcontext(CONTEXT):
        raw = dec(raw_execution_ms)
        init = dec(init_ms)
        if raw < 0 or init < 0:
            raise BillingError("durations must be >= 0")
        if config.billable_time_kind == "turnaround":
            base = raw + init
        else:
            base = raw
        clamped = max(base, config.time_min_cutoff_ms)
        if config.time_granularity_ms is None:
            raise MissingGranularityError(
                f"{config.name}: billing granularity not documented; cannot round time"
            )
        if clamped == 0:
            return Decimal(0)
        return ceil_to(clamped, config.time_granularity_ms)


def _alloc_amount(alloc: ResourceAllocation, spec: AllocResourceSpec) -> Decimal:
    if spec.resource == VCPU:
        return alloc.vcpus
    if spec.resource == MEMORY_GB:
        return alloc.memory_gb()
    return alloc.extras.get(spec.resource, Decimal(0))


def _usage_amount(record, spec: UsageResourceSpec, raw_exec_ms: Decimal) -> Decimal:
    if spec.resource == VCPU:
        avg_vcpus = dec(record.cpu_usage_avg_vcpus)
        if spec.billing_basis == "absolute":
            return avg_vcpus * raw_exec_ms  # consumed vCPU-milliseconds
        return avg_vcpus
    if spec.resource == MEMORY_GB:
        return dec(record.mem_usage_mb) / _MB_PER_GB
    return Decimal(0)  # custom usage resources are not carried by records


def _require_price(price: Optional[Decimal], what: str, config_name: str) -> Decimal:
    if price is None:
        raise MissingPriceError(f"{config_name}: {what} not documented publicly")
    return price


def compute_cost(record, config: PlatformBillingConfig) -> CostBreakdown:
    """Itemized cost of one invocation under ``config``.

    The record's allocation is expected to be platform-consistent already
    (see :func:`normalize_allocation`).  Custom resources present in the
    record but absent from the config raise :class:`UnpricedResourceError`.
    """
    with decimal.localcontext(CONTEXT):
        for name in record.alloc.extras:
            if config.alloc_spec(name) is None and config.usage_spec(name) is None:
                raise UnpricedResourceError(f"unpriced resource: {name}")

        exec_ms = dec(record.exec_duration_ms)
        if config.billable_time_kind == "cpu_time_only":
            raw_time = dec(record.cpu_usage_avg_vcpus) * exec_ms
        else:
            raw_time = exec_ms
        billable_ms = billable_time(raw_time, record.init_duration_ms, config)
        billable_s = billable_ms / _MS_PER_S

        alloc_terms = {}
        for spec in config.alloc_resources:
            amount = _alloc_amount(record.alloc, spec)
            billable_amount = ceil_to(amount, spec.granularity)
            if billable_amount == 0:
                usd = Decimal(0)
            else:
                price = _require_price(
                    spec.unit_price_usd_per_unit_second,
                    f"allocation price for {spec.resource}",
                    config.name,
                )
                usd = billable_amount * billable_s * price
            alloc_terms[spec.resource] = (billable_amount, usd)

        usage_terms = {}
        for spec in config.usage_resources:
            amount = _usage_amount(record, spec, exec_ms)
            billable_amount = ceil_to(amount, spec.granularity)
            if billable_amount == 0:
                usd = Decimal(0)
            else:
                price = _require_price(
                    spec.unit_price_usd_per_unit,
                    f"usage price for {spec.resource}",
                    config.name,
                )
                if spec.billing_basis == "per_billable_second":
                    usd = billable_amount * billable_s * price
                else:
                    usd = billable_amount * price
            usage_terms[spec.resource] = (billable_amount, usd)

        fee = _require_price(config.invocation_fee_usd, "invocation fee", config.name)
        return CostBreakdown(billable_ms, alloc_terms, usage_terms, fee)


def fee_equivalent_walltime(
    config: PlatformBillingConfig, alloc: ResourceAllocation
) -> Decimal:
    """Wall time (ms) whose allocation charge equals the invocation fee.

    Exact division of the fee by the per-millisecond allocation cost; no
    time rounding is applied.  Consumption-billed resources do not
    contribute (their charge needs a usage figure, not an allocation).
    """
    with decimal.localcontext(CONTEXT):
        fee = _require_price(config.invocation_fee_usd, "invocation fee", config.name)
        per_ms = Decimal(0)
        for spec in config.alloc_resources:
            amount = _alloc_amount(alloc, spec)
            billable_amount = ceil_to(amount, spec.granularity)
            if billable_amount == 0:
                continue
            price = _require_price(
                spec.unit_price_usd_per_unit_second,
                f"allocation price for {spec.resource}",
                config.name,
            )
            per_ms += billable_amount * price / _MS_PER_S
        if per_ms == 0:
            raise BillingError("fee has no time equivalent")
        return fee / per_ms
