"""Differential costs, the capped cumulative process and the offline optimum.

The offline schedule is read off the critical-segment decomposition of the
capped process: the generator runs exactly on the segments where the process
climbs from the lower boundary (-beta) to 0 and dwells there.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import InputSlot, Schedule, SystemParams, Trace, slot_cost, total_cost

ENUMERATION_LIMIT = 20


class HorizonTooLarge(ValueError):
    pass


def delta(slot: InputSlot, params: SystemParams) -> float:
    """Single-slot saving of running the generator: psi(off) - psi(on)."""
    return slot_cost(slot, 0, params) - slot_cost(slot, 1, params)


def delta_array(slots: Sequence[InputSlot], params: SystemParams) -> np.ndarray:
    return np.array([delta(s, params) for s in slots], dtype=float)


def step_capped(prev: float, d: float, beta: float) -> float:
    """One step of the clipped recursion; clipped values are the exact boundary."""
    x = prev + d
    if x >= 0.0:
        return 0.0
    if x <= -beta:
        return -beta
    return x


def at_upper(x: float, beta: float) -> bool:
    return abs(x) <= 1e-9 * beta


def at_lower(x: float, beta: float) -> bool:
    return abs(x + beta) <= 1e-9 * beta


@dataclass(frozen=True)
class DeltaSeries:
    delta: np.ndarray  # delta[t-1] for t = 1..T
    capped: np.ndarray  # capped[t] for t = 0..T, capped[0] = -beta
    beta: float


def capped_series(trace: Trace, params: SystemParams) -> DeltaSeries:
    d = delta_array(trace.slots, params)
    return capped_from_deltas(d, params.beta)


def capped_from_deltas(d, beta: float) -> DeltaSeries:
    d = np.asarray(d, dtype=float)
    cap = np.empty(len(d) + 1)
    cap[0] = -beta
    for t, x in enumerate(d, start=1):
        cap[t] = step_capped(cap[t - 1], x, beta)
    return DeltaSeries(d, cap, beta)


def window_cost(series: DeltaSeries, t: int, tau: int) -> float:
    """Uncapped cumulative differential cost over slots t..tau (1-based, inclusive)."""
    if tau < t:
        return 0.0
    return float(series.delta[t - 1 : tau].sum())


class SegmentKind(enum.Enum):
    START = "start"
    TYPE1 = "type1"
    TYPE2 = "type2"
    END = "end"


@dataclass(frozen=True)
class CriticalSegment:
    start: int
    end: int
    kind: SegmentKind
    transit_end: int | None = None


def _transits(series: DeltaSeries):
    """Boundary-to-boundary crossings as (departure, arrival, direction).

    The departure is the last index on the old boundary and the arrival the
    first index on the new one.  Excursions that return to the boundary they
    left are part of the dwell.
    """
    beta = series.beta
    side = "low"
    last = {"low": 0, "high": None}
    out = []
    for t in range(1, len(series.capped)):
        x = series.capped[t]
        if at_upper(x, beta):
            if side == "low":
                out.append((last["low"], t, "up"))
                side = "high"
            last["high"] = t
        elif at_lower(x, beta):
            if side == "high":
                out.append((last["high"], t, "down"))
                side = "low"
            last["low"] = t
    return out, side, last


def decompose(series: DeltaSeries) -> list[CriticalSegment]:
    T = len(series.delta)
    if series.beta <= 0:
        raise ValueError("segment decomposition needs beta > 0")
    transits, side, last = _transits(series)
    if not transits:
        return [CriticalSegment(1, T, SegmentKind.END)]
    segs = []
    first_dep = transits[0][0]
    if first_dep >= 1:
        segs.append(CriticalSegment(1, first_dep, SegmentKind.START))
    for i, (dep, arr, direction) in enumerate(transits):
        kind = SegmentKind.TYPE1 if direction == "up" else SegmentKind.TYPE2
        if i + 1 < len(transits):
            end = transits[i + 1][0]
        else:
            # last completed transit: the segment ends at the final index on
            # the boundary it reached, anything after is the tail
            end = last["high"] if direction == "up" else last["low"]
        segs.append(CriticalSegment(dep + 1, end, kind, arr))
    tail_from = segs[-1].end + 1
    if tail_from <= T:
        segs.append(CriticalSegment(tail_from, T, SegmentKind.END))
    return segs


def offline_statuses(series: DeltaSeries) -> list[int]:
    T = len(series.delta)
    if series.beta <= 0:
        # no switching cost: run whenever it pays off in the slot itself
        return [int(x > 0) for x in series.delta]
    y = [0] * T
    for seg in decompose(series):
        if seg.kind is SegmentKind.TYPE1:
            for t in range(seg.start, seg.end + 1):
                y[t - 1] = 1
    return y


def offline_optimal(trace: Trace, params: SystemParams) -> Schedule:
    series = capped_series(trace, params)
    return total_cost(offline_statuses(series), trace, params)


def dp_optimal(trace: Trace, params: SystemParams, y0: int = 0, terminal=(0.0, 0.0)) -> Schedule:
    """Exact dynamic program over the on/off state."""
    y = dp_statuses(
        [slot_cost(s, 0, params) for s in trace.slots],
        [slot_cost(s, 1, params) for s in trace.slots],
        params.beta,
        y0,
        terminal,
    )
    return total_cost(y, trace, params)


def dp_statuses(cost_off, cost_on, beta: float, y0: int = 0, terminal=(0.0, 0.0)) -> list[int]:
    """Minimum-cost binary sequence for per-slot costs and a startup charge.

    ``terminal`` adds a cost for ending in state 0 or 1.  Ties prefer staying off.
    """
    T = len(cost_off)
    if T == 0:
        return []
    INF = float("inf")
    best = [[INF, INF] for _ in range(T)]
    came = [[0, 0] for _ in range(T)]
    best[0][0] = cost_off[0]
    best[0][1] = cost_on[0] + (beta if y0 == 0 else 0.0)
    for t in range(1, T):
        b0 = best[t - 1]
        # into state 0
        if b0[0] <= b0[1]:
            best[t][0], came[t][0] = b0[0] + cost_off[t], 0
        else:
            best[t][0], came[t][0] = b0[1] + cost_off[t], 1
        # into state 1
        from_off = b0[0] + beta
        if from_off < b0[1]:
            best[t][1], came[t][1] = from_off + cost_on[t], 0
        else:
            best[t][1], came[t][1] = b0[1] + cost_on[t], 1
    end0 = best[T - 1][0] + terminal[0]
    end1 = best[T - 1][1] + terminal[1]
    state = 0 if end0 <= end1 else 1
    y = [0] * T
    for t in range(T - 1, -1, -1):
        y[t] = state
        state = came[t][state]
    return y


def brute_force_optimal(trace: Trace, params: SystemParams) -> Schedule:
    """Exhaustive search over all 2^T on/off sequences (small horizons only)."""
    T = len(trace)
    if T > ENUMERATION_LIMIT:
        raise HorizonTooLarge(f"T={T} exceeds enumeration limit {ENUMERATION_LIMIT}")
    off = np.array([slot_cost(s, 0, params) for s in trace.slots])
    on = np.array([slot_cost(s, 1, params) for s in trace.slots])
    ys = np.array(list(itertools.product((0, 1), repeat=T)), dtype=np.int8)
    run = np.where(ys == 1, on, off).sum(axis=1)
    prev = np.concatenate([np.zeros((len(ys), 1), np.int8), ys[:, :-1]], axis=1)
    starts = np.clip(ys - prev, 0, None).sum(axis=1)
    costs = run + params.beta * starts
    best = int(np.argmin(costs))
    return total_cost(ys[best].tolist(), trace, params)
