"""Discrete-event simulator for CPU bandwidth control on one core.

Models the quota/period mechanism the way the kernel runs it: a global
pool refilled to the quota once per period (no accumulation), per-CPU
local slices acquired on demand, and runtime accounting that lags actual
consumption until the next scheduler tick. The lag lets a task overrun its
quota into debt, which later refills must repay before it can run again;
that reproduces the long, uneven throttle intervals seen under small
quotas.

All times are integer microseconds. Events at the same instant resolve in
a fixed order: completion, tick, slice mark, refill.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

from .types import (
    RUNNING,
    THROTTLED,
    BandwidthControlConfig,
    Number,
    ScheduleTimeline,
    Segment,
    SchedulingError,
    TaskSpec,
    to_us,
)

_DONE, _TICK, _MARK, _REFILL = 0, 1, 2, 3
_US = 1_000_000


def _build_segments(
    transitions: List[Tuple[int, str]], completion_us: int
) -> Tuple[Segment, ...]:
    # Transitions are (time, new_state); zero-length pieces (throttles
    # resolved at the same instant they start) are dropped, then adjacent
    # same-state pieces merge.
    out: List[Segment] = []
    for i, (start, state) in enumerate(transitions):
        end = transitions[i + 1][0] if i + 1 < len(transitions) else completion_us
        if end == start:
            continue
        if out and out[-1].state == state:
            out[-1] = Segment(out[-1].start_us, end, state)
        else:
            out.append(Segment(start, end, state))
    return tuple(out)


def simulate(
    task: TaskSpec,
    config: BandwidthControlConfig,
    *,
    lagged_accounting: bool = True,
    tick_phase_ms: Number = 0,
) -> ScheduleTimeline:
    """Run one CPU-bound task to completion under bandwidth control.

    With ``lagged_accounting`` (the default), runtime is charged only at
    scheduler ticks, at completion, and (eevdf flavor) after each slice of
    consumption. Disabling it charges runtime continuously with the slice
    pinned to the full quota, which makes completion match the closed form
    exactly; that mode exists as a cross-check, not as a kernel model.
    """
    remaining = to_us(task.cpu_time_ms, "cpu_time_ms")
    period = to_us(config.period_ms, "period_ms")
    quota = to_us(config.quota_ms, "quota_ms")
    slice_us = to_us(config.slice_ms, "slice_ms") if lagged_accounting else quota
    phase = to_us(tick_phase_ms, "tick_phase_ms")
    if phase < 0:
        raise SchedulingError("tick_phase_ms must be >= 0")
    hz = config.tick_hz
    eevdf = config.flavor == "eevdf"

    def tick_at(index: int) -> int:
        # Integer grid with exact long-run rate even when 1e6/hz is not
        # an integer (e.g. 300 Hz).
        return phase + (index * _US) // hz

    t = 0
    local = 0
    global_pool = quota
    tick_index = 1
    next_tick = tick_at(tick_index)
    next_refill = period
    last_account = 0
    transitions: List[Tuple[int, str]] = [(0, RUNNING)]
    overruns: List[int] = []
    throttled = False

    # Initial acquisition: the task starts against a freshly filled pool.
    take = min(slice_us, global_pool)
    local += take
    global_pool -= take

    while True:
        if throttled:
            # local <= 0 here; each refill resets the global pool to the
            # quota and repays debt + 1us, so the number of refills until
            # local goes positive is closed-form.
            debt = -local
            refills = debt // quota + 1
            t = next_refill + (refills - 1) * period
            final_transfer = debt - (refills - 1) * quota + 1
            local = 1
            global_pool = quota - final_transfer
            next_refill = t + period
            throttled = False
            transitions.append((t, RUNNING))
            last_account = t
            while next_tick <= t:
                tick_index += 1
                next_tick = tick_at(tick_index)
            continue

        completion_t = last_account + remaining
        event_t, kind = completion_t, _DONE
        if lagged_accounting:
            if next_tick < event_t or (next_tick == event_t and _TICK < kind):
                event_t, kind = next_tick, _TICK
            if eevdf:
                mark = last_account + slice_us
                if mark < event_t or (mark == event_t and _MARK < kind):
                    event_t, kind = mark, _MARK
        else:
            mark = last_account + local
            if mark < event_t or (mark == event_t and _MARK < kind):
                event_t, kind = mark, _MARK
        if next_refill < event_t or (next_refill == event_t and _REFILL < kind):
            event_t, kind = next_refill, _REFILL

        t = event_t
        if kind == _DONE:
            local -= remaining
            remaining = 0
            if local < 0:
                overruns.append(-local)
            break
        if kind == _REFILL:
            global_pool = quota
            next_refill += period
            continue
        # tick or slice mark: charge consumption since the last accounting
        consumed = t - last_account
        remaining -= consumed
        local -= consumed
        last_account = t
        if local < 0:
            overruns.append(-local)
        if kind == _TICK:
            tick_index += 1
            next_tick = tick_at(tick_index)
        if local <= 0:
            take = min(slice_us, global_pool)
            local += take
            global_pool -= take
            if local <= 0:
                throttled = True
                transitions.append((t, THROTTLED))

    segments = _build_segments(transitions, t)
    return ScheduleTimeline(
        cpu_time_ms=float(task.cpu_time_ms),
        config=config,
        segments=segments,
        completion_us=t,
        overruns_us=tuple(overruns),
    )
