"""Serverless cost modeling toolkit.

Four areas, one package:

- ``faascost.billing``: a generalized pay-per-use cost engine (granularity
  rounding, minimum cutoffs, invocation fees) plus editable per-platform
  billing configs.
- ``faascost.traces``: invocation-trace analytics (billable-resource
  inflation, utilization correlation, cold-start differentials, rounding-up
  statistics) with streaming aggregation.
- ``faascost.sched``: CPU bandwidth-control models, both the closed-form
  duration formula and a discrete-event simulator with lagged tick
  accounting.
- ``faascost.profiler``: a user-space throttle probe and an offline analyzer
  that infers scheduler period, quota, and timer frequency from throttle
  observations.
"""

__version__ = "0.1.0"
