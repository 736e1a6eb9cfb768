"""Online on/off policies with a lookahead window, and the simulation driver.

A policy sees only its own state (last status, the realised capped process
up to the previous slot) and a prediction window whose first slot is the
exact current input.  Decisions use predicted inputs; the capped process and
the cost are driven by the realised trace.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .model import DispatchSlot, InputSlot, Schedule, SystemParams, Trace, dispatch_given_status, slot_cost, total_cost
from .ratio import alpha, cr_chaselk, optimal_threshold
from .segments import at_lower, at_upper, delta, dp_statuses, step_capped


@dataclass
class PolicyState:
    y_prev: int = 0
    t: int = 1
    capped_prefix: float = 0.0  # capped process at t - 1


@dataclass(frozen=True)
class PredictionWindow:
    slots: tuple[InputSlot, ...]
    w: int

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        if not self.slots:
            raise ValueError("a window holds at least the current slot")


NOISE_KINDS = ("none", "gaussian", "hyperbolic")


@dataclass(frozen=True)
class NoiseModel:
    """Additive forecast error on electricity and heat demand.

    Standard deviations are fractions of ``wind_capacity`` (electricity) and
    ``heat_peak`` (heat); when those are None the trace's own peaks are used.
    The hyperbolic option is a symmetric hyperbolic law with shape ``tail``,
    rescaled to the same standard deviation.
    """

    kind: str = "none"
    wind_std_frac: float = 0.0
    heat_std_frac: float = 0.0
    wind_capacity: float | None = None
    heat_peak: float | None = None
    tail: float = 1.0
    location: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        for name in ("wind_std_frac", "heat_std_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.tail <= 0:
            raise ValueError("tail must be positive")

    def draw(self, rng: np.random.Generator, std: float, n: int) -> np.ndarray:
        if self.kind == "none" or std == 0 or n == 0:
            return np.zeros(n)
        if self.kind == "gaussian":
            return self.location + std * rng.standard_normal(n)
        law = stats.genhyperbolic(p=1.0, a=self.tail, b=0.0)
        scale = std / law.std()
        return self.location + scale * law.rvs(size=n, random_state=rng)


NO_NOISE = NoiseModel()


def noise_scales(trace: Trace, noise: NoiseModel) -> tuple[float, float]:
    """Absolute error scales (electricity, heat) the std fractions refer to."""
    if noise.wind_capacity is not None and noise.heat_peak is not None:
        return noise.wind_capacity, noise.heat_peak
    a, h, _ = trace.arrays()
    wind = noise.wind_capacity if noise.wind_capacity is not None else float(a.max())
    heat = noise.heat_peak if noise.heat_peak is not None else float(h.max())
    return wind, heat


def noisy_window(
    trace: Trace,
    t: int,
    w: int,
    noise: NoiseModel = NO_NOISE,
    scales: tuple[float, float] | None = None,
) -> PredictionWindow:
    """Window [t, t+w] (1-based, truncated at the horizon) with perturbed future slots.

    Errors for step t come from a generator seeded by (seed, t), so a window
    does not depend on which other windows were drawn before it.
    """
    T = len(trace)
    end = min(t + w, T)
    slots = list(trace.slots[t - 1 : end])
    n = len(slots) - 1
    if noise.kind == "none" or n == 0:
        return PredictionWindow(slots, w)
    wind_cap, heat_cap = scales if scales is not None else noise_scales(trace, noise)
    rng = np.random.default_rng([noise.seed, t])
    ea = noise.draw(rng, noise.wind_std_frac * wind_cap, n)
    eh = noise.draw(rng, noise.heat_std_frac * heat_cap, n)
    out = [slots[0]]
    for s, da, dh in zip(slots[1:], ea, eh):
        out.append(InputSlot(max(0.0, s.a + float(da)), max(0.0, s.h + float(dh)), s.p))
    return PredictionWindow(out, w)


def _forward(state: PolicyState, window: PredictionWindow, params: SystemParams):
    """Predicted differential costs and capped process over the window."""
    ds, caps = [], []
    x = state.capped_prefix
    for s in window.slots:
        d = delta(s, params)
        x = step_capped(x, d, params.beta)
        ds.append(d)
        caps.append(x)
    return ds, caps


def _first_hit(caps: Sequence[float], beta: float):
    for i, x in enumerate(caps):
        if at_upper(x, beta):
            return i, "up"
        if at_lower(x, beta):
            return i, "down"
    return None, None


def chase_step(state: PolicyState, slot: InputSlot, params: SystemParams) -> int:
    x = step_capped(state.capped_prefix, delta(slot, params), params.beta)
    if at_upper(x, params.beta):
        return 1
    if at_lower(x, params.beta):
        return 0
    return state.y_prev


def chaselk_step(state: PolicyState, window: PredictionWindow, params: SystemParams) -> int:
    _, caps = _forward(state, window, params)
    _, kind = _first_hit(caps, params.beta)
    if kind == "up":
        return 1
    if kind == "down":
        return 0
    return state.y_prev


def chasepp_step(state: PolicyState, window: PredictionWindow, lam: float, params: SystemParams) -> int:
    ds, caps = _forward(state, window, params)
    beta = params.beta
    i1, kind = _first_hit(caps, beta)
    if kind == "down":
        return 0
    if kind == "up":
        i2 = next((i for i, x in enumerate(caps) if at_lower(x, beta)), None)
        if i2 is None:
            if sum(ds) >= lam:
                return 1
        elif sum(ds[: i2 + 1]) >= 0:
            return 1
    return state.y_prev


def chasepp_plus_step(
    state: PolicyState,
    window: PredictionWindow,
    params: SystemParams,
    cr_chasepp: float,
    lam: float | None = None,
) -> DispatchSlot:
    slot = window.slots[0]
    if 1.0 / alpha(params) < cr_chasepp:
        return DispatchSlot(0, 0.0, slot.a, slot.h)
    if lam is None:
        lam = optimal_threshold(window.w, params).lambda_star
    y = chasepp_step(state, window, lam, params)
    return dispatch_given_status(slot, y, params)


def rhc_step(state: PolicyState, window: PredictionWindow, params: SystemParams) -> int:
    """Plan the window optimally from the current status and keep the first move."""
    off = [slot_cost(s, 0, params) for s in window.slots]
    on = [slot_cost(s, 1, params) for s in window.slots]
    return dp_statuses(off, on, params.beta, y0=state.y_prev)[0]


class Policy:
    name = "policy"

    def __init__(self, params: SystemParams, w: int):
        self.params = params
        self.w = w

    def decide(self, state: PolicyState, window: PredictionWindow) -> int:
        raise NotImplementedError


class Chase(Policy):
    name = "chase"

    def decide(self, state, window):
        return chase_step(state, window.slots[0], self.params)


class ChaseLk(Policy):
    name = "chaselk"

    def decide(self, state, window):
        return chaselk_step(state, window, self.params)


class ChaseLkPlus(ChaseLk):
    name = "chaselk_plus"

    def __init__(self, params, w):
        super().__init__(params, w)
        self.external_only = 1.0 / alpha(params) < cr_chaselk(w, params)

    def decide(self, state, window):
        if self.external_only:
            return 0
        return super().decide(state, window)


class ChasePP(Policy):
    name = "chasepp"

    def __init__(self, params, w, lam: float | None = None):
        super().__init__(params, w)
        self.threshold = optimal_threshold(w, params)
        self.lam = self.threshold.lambda_star if lam is None else lam

    def decide(self, state, window):
        return chasepp_step(state, window, self.lam, self.params)


class ChasePPPlus(ChasePP):
    name = "chasepp_plus"

    def decide(self, state, window):
        return chasepp_plus_step(state, window, self.params, self.threshold.cr, self.lam).y


class RHC(Policy):
    name = "rhc"

    def decide(self, state, window):
        return rhc_step(state, window, self.params)


class AlwaysOff(Policy):
    name = "external"

    def decide(self, state, window):
        return 0


class AlwaysOn(Policy):
    name = "always_on"

    def decide(self, state, window):
        return 1


POLICIES: dict[str, type[Policy]] = {
    cls.name: cls for cls in (Chase, ChaseLk, ChaseLkPlus, ChasePP, ChasePPPlus, RHC, AlwaysOff, AlwaysOn)
}


def make_policy(policy, params: SystemParams, w: int) -> Policy:
    if isinstance(policy, Policy):
        return policy
    if isinstance(policy, str):
        try:
            policy = POLICIES[policy]
        except KeyError:
            raise ValueError(f"unknown policy {policy!r}; choose from {sorted(POLICIES)}") from None
    return policy(params, w)


Predictor = Callable[[int, int], PredictionWindow]


def run_online(
    policy,
    trace: Trace,
    w: int,
    noise: NoiseModel = NO_NOISE,
    params: SystemParams | None = None,
    predictor: Predictor | None = None,
) -> Schedule:
    """Simulate ``policy`` over the trace; returns the realised schedule.

    ``predictor(t, w)`` overrides how windows are built (used for demand
    layers, whose forecasts are slices of the aggregate forecast).
    """
    if params is None:
        raise TypeError("params is required")
    pol = make_policy(policy, params, w)
    if predictor is None:
        scales = noise_scales(trace, noise) if noise.kind != "none" else None
        predictor = lambda t, w_: noisy_window(trace, t, w_, noise, scales)
    state = PolicyState(0, 1, -params.beta)
    ys = []
    for t, slot in enumerate(trace.slots, start=1):
        state.t = t
        y = int(pol.decide(state, predictor(t, w)))
        ys.append(y)
        state.capped_prefix = step_capped(state.capped_prefix, delta(slot, params), params.beta)
        state.y_prev = y
    return total_cost(ys, trace, params)
