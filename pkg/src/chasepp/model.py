"""Single-generator microgrid cost model.

Holds the economic parameters of a combined heat-and-power generator, the
per-slot input (net electricity demand, heat demand, spot price), the
closed-form economic dispatch for a fixed on/off status, and the total
operating cost of an on/off schedule including startup charges.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np


class AssumptionViolated(ValueError):
    """Raised when generator or market parameters break a modelling assumption."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"{name}" + (f": {detail}" if detail else ""))


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SystemParams:
    beta: float  # startup cost ($)
    c_m: float  # sunk running cost per slot ($)
    c_o: float  # incremental generation cost ($/kWh)
    L: float  # capacity (kW)
    eta: float  # heat recovery efficiency
    c_g: float  # external heat price ($/kWh)
    p_min: float = 0.0
    p_max: float = 1.0

    @property
    def full_price(self) -> float:
        """Largest per-unit cost of buying electricity plus the co-generated heat."""
        return self.p_max + self.eta * self.c_g

    def with_capacity(self, L: float) -> "SystemParams":
        return replace(self, L=L)


def validate_params(params: SystemParams) -> None:
    """Check sign constraints, the two economic assumptions and a positive generation cost.

    Raises AssumptionViolated naming the inequality that fails.
    """
    p = params
    checks = [
        ("beta >= 0", p.beta >= 0),
        ("c_m >= 0", p.c_m >= 0),
        ("c_o >= 0", p.c_o >= 0),
        ("L > 0", p.L > 0),
        ("eta >= 0", p.eta >= 0),
        ("c_g >= 0", p.c_g >= 0),
        ("0 <= p_min <= p_max", 0 <= p.p_min <= p.p_max),
    ]
    for name, ok in checks:
        if not ok:
            raise AssumptionViolated(name)
    if p.c_o < p.eta * p.c_g:
        raise AssumptionViolated("c_o >= eta*c_g", f"{p.c_o} < {p.eta * p.c_g}")
    lhs = p.c_o + p.c_m / p.L
    if lhs <= 0:
        raise AssumptionViolated("c_o + c_m/L > 0", "generation must cost something")
    rhs = p.p_max + p.eta * p.c_g
    if lhs > rhs:
        raise AssumptionViolated("c_o + c_m/L <= p_max + eta*c_g", f"{lhs} > {rhs}")


@dataclass(frozen=True)
class InputSlot:
    a: float  # net electricity demand (kW)
    h: float  # heat demand (kW)
    p: float  # spot price ($/kWh)

    def check(self, params: SystemParams, index: int | None = None) -> None:
        where = "" if index is None else f" (slot {index})"
        if self.a < 0:
            raise ValueError(f"negative electricity demand{where}: {self.a}")
        if self.h < 0:
            raise ValueError(f"negative heat demand{where}: {self.h}")
        if not params.p_min <= self.p <= params.p_max:
            raise ValueError(
                f"price {self.p} outside [{params.p_min}, {params.p_max}]{where}"
            )


@dataclass(frozen=True)
class Trace:
    slots: tuple[InputSlot, ...]
    slot_hours: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if len(self.slots) < 1:
            raise ValueError("a trace needs at least one slot")

    def __len__(self) -> int:
        return len(self.slots)

    def __getitem__(self, i):
        return self.slots[i]

    def __iter__(self):
        return iter(self.slots)

    @classmethod
    def from_arrays(cls, a, h, p, slot_hours: float = 1.0) -> "Trace":
        a, h, p = np.broadcast_arrays(
            np.asarray(a, float), np.asarray(h, float), np.asarray(p, float)
        )
        return cls(
            tuple(InputSlot(float(x), float(y), float(z)) for x, y, z in zip(a, h, p)),
            slot_hours,
        )

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = np.array([s.a for s in self.slots])
        h = np.array([s.h for s in self.slots])
        p = np.array([s.p for s in self.slots])
        return a, h, p

    def check(self, params: SystemParams) -> None:
        for i, s in enumerate(self.slots, start=1):
            s.check(params, i)


@dataclass(frozen=True)
class DispatchSlot:
    y: int
    u: float  # generator output
    v: float  # grid purchase
    s: float  # gas heat

    def is_feasible(self, slot: InputSlot, params: SystemParams) -> bool:
        tol = 1e-9 * max(1.0, params.L)
        return (
            -tol <= self.u <= params.L * self.y + tol
            and abs(self.u + self.v - slot.a) <= tol
            and params.eta * self.u + self.s >= slot.h - tol
            and self.v >= -tol
            and self.s >= -tol
        )


@dataclass(frozen=True)
class Schedule:
    dispatch: tuple[DispatchSlot, ...]
    total_cost: float
    startup_count: int
    y0: int = 0

    @property
    def y(self) -> list[int]:
        return [d.y for d in self.dispatch]


def dispatch_given_status(slot: InputSlot, y: int, params: SystemParams) -> DispatchSlot:
    """Cost-minimising generator output, grid purchase and gas heat for status ``y``."""
    cap = params.L * y
    if slot.p + params.eta * params.c_g <= params.c_o:
        u = 0.0
    elif slot.p < params.c_o:
        # only reachable with eta > 0: generating pays off while heat is still needed
        u = min(slot.h / params.eta, slot.a, cap)
    else:
        u = min(slot.a, cap)
    u = max(u, 0.0)
    v = max(slot.a - u, 0.0)
    s = max(slot.h - params.eta * u, 0.0)
    return DispatchSlot(int(y), u, v, s)


def _psi(slot: InputSlot, d: DispatchSlot, params: SystemParams) -> float:
    return slot.p * d.v + params.c_g * d.s + params.c_o * d.u + params.c_m * d.y


def slot_cost(slot: InputSlot, y: int, params: SystemParams) -> float:
    """Operating cost of one slot (no startup charge) under optimal dispatch."""
    return _psi(slot, dispatch_given_status(slot, y, params), params)


def total_cost(y_sequence: Sequence[int], trace: Trace, params: SystemParams) -> Schedule:
    if len(y_sequence) != len(trace):
        raise LengthMismatch(f"{len(y_sequence)} statuses for {len(trace)} slots")
    dispatch = []
    cost = 0.0
    starts = 0
    prev = 0
    for slot, y in zip(trace.slots, y_sequence):
        y = int(y)
        d = dispatch_given_status(slot, y, params)
        dispatch.append(d)
        cost += _psi(slot, d, params)
        if y > prev:
            starts += 1
            cost += params.beta
        prev = y
    return Schedule(tuple(dispatch), cost, starts)


def external_cost(trace: Trace, params: SystemParams) -> float:
    """Cost of serving every slot from the grid and gas (generator never on)."""
    return sum(slot.p * slot.a + params.c_g * slot.h for slot in trace.slots)
