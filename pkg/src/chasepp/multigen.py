"""Several generators of different sizes, scheduled by slicing demand into layers.

Generator n (largest first) serves the slice of electricity demand between
the combined capacity of the larger units and that plus its own capacity;
heat is sliced the same way with caps eta*L_n.  Whatever exceeds the fleet
goes to the grid and the gas boiler.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import InputSlot, Schedule, SystemParams, Trace, external_cost, slot_cost, total_cost
from .online import NO_NOISE, NoiseModel, PredictionWindow, noise_scales, noisy_window, run_online
from .ratio import cr_chasepp
from .segments import ENUMERATION_LIMIT, HorizonTooLarge, offline_optimal


class EmptyFleet(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorFleet:
    units: tuple[SystemParams, ...]

    def __post_init__(self):
        if not self.units:
            raise EmptyFleet("a fleet needs at least one generator")
        # sorted() is stable, so equal capacities keep their input order
        object.__setattr__(self, "units", tuple(sorted(self.units, key=lambda u: -u.L)))

    @classmethod
    def from_capacities(cls, base: SystemParams, capacities: Sequence[float]) -> "GeneratorFleet":
        return cls(tuple(base.with_capacity(float(c)) for c in capacities))

    @property
    def capacities(self) -> list[float]:
        return [u.L for u in self.units]

    def __len__(self) -> int:
        return len(self.units)


@dataclass(frozen=True)
class LayeredTrace:
    layers: tuple[Trace, ...]
    top: Trace  # demand beyond the whole fleet


def _slice(x: np.ndarray, caps: Sequence[float]) -> tuple[list[np.ndarray], np.ndarray]:
    out = []
    below = 0.0
    for c in caps:
        out.append(np.minimum(c, np.maximum(x - below, 0.0)))
        below += c
    return out, np.maximum(x - below, 0.0)


def _layer_arrays(a, h, fleet: GeneratorFleet):
    a_layers, a_top = _slice(np.asarray(a, float), fleet.capacities)
    h_layers, h_top = _slice(np.asarray(h, float), [u.eta * u.L for u in fleet.units])
    return a_layers, h_layers, a_top, h_top


def layer_demand(trace: Trace, fleet: GeneratorFleet) -> LayeredTrace:
    a, h, p = trace.arrays()
    a_layers, h_layers, a_top, h_top = _layer_arrays(a, h, fleet)
    layers = tuple(
        Trace.from_arrays(al, hl, p, trace.slot_hours) for al, hl in zip(a_layers, h_layers)
    )
    return LayeredTrace(layers, Trace.from_arrays(a_top, h_top, p, trace.slot_hours))


def _layer_windows(window: PredictionWindow, fleet: GeneratorFleet) -> list[PredictionWindow]:
    a = [s.a for s in window.slots]
    h = [s.h for s in window.slots]
    a_layers, h_layers, _, _ = _layer_arrays(a, h, fleet)
    return [
        PredictionWindow(
            [InputSlot(float(x), float(y), s.p) for x, y, s in zip(al, hl, window.slots)], window.w
        )
        for al, hl in zip(a_layers, h_layers)
    ]


@dataclass(frozen=True)
class FleetSchedule:
    layers: tuple[Schedule, ...]
    top_cost: float
    total_cost: float

    @property
    def startup_count(self) -> int:
        return sum(s.startup_count for s in self.layers)

    @property
    def statuses(self) -> np.ndarray:
        """N x T matrix of on/off statuses, largest generator first."""
        return np.array([s.y for s in self.layers], dtype=int)


FLEET_MODES = ("offline", "chase", "chaselk", "chaselk_plus", "chasepp", "chasepp_plus", "rhc")


def schedule_fleet(
    trace: Trace,
    fleet: GeneratorFleet,
    mode: str = "offline",
    w: int = 0,
    noise: NoiseModel = NO_NOISE,
) -> FleetSchedule:
    """Schedule every layer on its own; online layers see slices of the aggregate forecast."""
    if mode not in FLEET_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {FLEET_MODES}")
    layered = layer_demand(trace, fleet)
    scales = noise_scales(trace, noise) if noise.kind != "none" else None
    cache: dict[int, list[PredictionWindow]] = {}  # every layer sees the same aggregate forecast

    def layer_view(t, w_):
        if t not in cache:
            cache[t] = _layer_windows(noisy_window(trace, t, w_, noise, scales), fleet)
        return cache[t]

    scheds = []
    for n, (unit, lt) in enumerate(zip(fleet.units, layered.layers)):
        if mode == "offline":
            scheds.append(offline_optimal(lt, unit))
            continue

        def predictor(t, w_, n=n):
            return layer_view(t, w_)[n]

        scheds.append(run_online(mode, lt, w, noise, unit, predictor=predictor))
    top = external_cost(layered.top, fleet.units[0])
    return FleetSchedule(tuple(scheds), top, sum(s.total_cost for s in scheds) + top)


def cr_fleet(fleet: GeneratorFleet, w: float) -> float:
    if not fleet.units:
        raise EmptyFleet("a fleet needs at least one generator")
    return max(cr_chasepp(w, u) for u in fleet.units)


def joint_brute_force(trace: Trace, fleet: GeneratorFleet) -> tuple[float, np.ndarray]:
    """Cheapest joint on/off plan found by trying every status combination.

    Independent of layering: with a given set of running units the cheapest
    dispatch pools their capacity, so each slot costs the single-unit cost
    at the pooled capacity plus one running charge per running unit.
    """
    N, T = len(fleet), len(trace)
    if N * T > ENUMERATION_LIMIT:
        raise HorizonTooLarge(f"{2 ** (N * T)} combinations is too many")
    combos = np.array(list(itertools.product((0, 1), repeat=N)))  # (2^N, N)
    base = fleet.units[0]
    per_slot = np.empty((T, len(combos)))
    for j, on in enumerate(combos):
        cap = float(np.dot(on, fleet.capacities))
        running = int(on.sum())
        for t, slot in enumerate(trace.slots):
            if running == 0:
                per_slot[t, j] = slot_cost(slot, 0, base)
            else:
                pooled = base.with_capacity(cap)
                per_slot[t, j] = slot_cost(slot, 1, pooled) + base.c_m * (running - 1)
    plans = np.array(list(itertools.product(range(len(combos)), repeat=T)))  # (K, T)
    cost = per_slot[np.arange(T), plans].sum(axis=1)
    status = combos[plans]  # (K, T, N)
    prev = np.concatenate([np.zeros((len(plans), 1, N), int), status[:, :-1, :]], axis=1)
    starts = ((status == 1) & (prev == 0)).sum(axis=(1, 2))
    cost = cost + base.beta * starts
    best = int(np.argmin(cost))
    return float(cost[best]), status[best].T
