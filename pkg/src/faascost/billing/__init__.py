"""Generalized pay-per-use billing: cost engine and platform configs."""

from faascost.billing.engine import (
    billable_time,
    compute_cost,
    fee_equivalent_walltime,
    normalize_allocation,
)
from faascost.billing.model import (
    AllocResourceSpec,
    BillingError,
    CostBreakdown,
    CpuProportionalToMemory,
    FixedCombos,
    IndependentKnobs,
    MissingPriceError,
    PlatformBillingConfig,
    RatioConstrained,
    ResourceAllocation,
    UnpricedResourceError,
    UsageResourceSpec,
)
from faascost.billing.platforms import (
    bundled_platform_names,
    load_platform_config,
    resolve_platform,
    resolve_platform_path,
)

__all__ = [
    "AllocResourceSpec",
    "BillingError",
    "CostBreakdown",
    "CpuProportionalToMemory",
    "FixedCombos",
    "IndependentKnobs",
    "MissingPriceError",
    "PlatformBillingConfig",
    "RatioConstrained",
    "ResourceAllocation",
    "UnpricedResourceError",
    "UsageResourceSpec",
    "billable_time",
    "bundled_platform_names",
    "compute_cost",
    "fee_equivalent_walltime",
    "load_platform_config",
    "normalize_allocation",
    "resolve_platform",
    "resolve_platform_path",
]
