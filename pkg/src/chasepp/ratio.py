"""Closed-form competitive ratios and the optimal turn-on threshold.

All quantities are per slot: ``w`` counts slots, ``c_m`` is the running
cost of one slot and ``L`` the energy one slot of full output produces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import SystemParams


class DegenerateWindow(ValueError):
    pass


def alpha(params: SystemParams) -> float:
    return (params.c_o + params.c_m / params.L) / params.full_price


def cr_chase(params: SystemParams) -> float:
    return 3.0 - 2.0 * alpha(params)


def f_chaselk(a: float, w: float, params: SystemParams) -> float:
    """CHASElk's improvement term; its ratio bound is 3 - 2 f."""
    if a >= 1.0:
        return 1.0
    denom = w * params.c_m * (params.L * params.c_o + params.c_m)
    if denom <= 0:
        return a
    x = params.beta * (params.L * params.c_o + params.c_m / (1.0 - a)) / denom
    return a + (1.0 - a) / (1.0 + x)


def cr_chaselk(w: float, params: SystemParams) -> float:
    return 3.0 - 2.0 * f_chaselk(alpha(params), w, params)


def cr_chaselk_plus(w: float, params: SystemParams) -> float:
    return min(cr_chaselk(w, params), 1.0 / alpha(params))


def _on_terms(lam: float, w: float, params: SystemParams) -> list[float]:
    P = params.full_price
    shrink = 1.0 - params.c_m / (params.L * (P - params.c_o)) if P > params.c_o else 0.0
    out = []
    for q in {0.0, w * params.c_m}:
        den = params.beta + (2 * w * params.c_m - q + params.c_o / P * lam) * shrink
        if den <= 0:
            # beta = 0 and nothing else in the denominator: the term is 0/0
            out.append(0.0 if 2 * params.beta - q <= 0 else math.inf)
        else:
            out.append((2 * params.beta - q) / den)
    return out


def r_on(lam: float, w: float, params: SystemParams) -> float:
    """Worst-case ratio when the threshold lets the generator start early."""
    P = params.full_price
    prefactor = 1.0 - (params.L * params.c_o + params.c_m) / (params.L * P)
    if prefactor <= 0:
        return 1.0
    return 1.0 + prefactor * max(_on_terms(lam, w, params))


def r_off(lam: float, w: float, params: SystemParams) -> float:
    """Worst-case ratio when the threshold keeps the generator off too long."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    if lam == 0:
        return 1.0
    if w == 0:
        raise DegenerateWindow("r_off is undefined for w = 0 and a positive threshold")
    wc = w * params.c_m
    den = wc + params.c_o / params.full_price * lam
    return (wc + lam) / den if den > 0 else math.inf


def threshold_cap(w: float, params: SystemParams) -> float:
    steep = params.L * (params.full_price - params.c_o - params.c_m / params.L)
    return max(0.0, min(params.beta, steep * w))


@dataclass(frozen=True)
class ThresholdResult:
    lambda_star: float
    r_on_at: float
    r_off_at: float
    cr: float


def optimal_threshold(w: float, params: SystemParams, max_iter: int = 200) -> ThresholdResult:
    """Largest threshold in the feasible box at which r_on still dominates r_off.

    r_on falls and r_off rises with the threshold, so the crossing is found by
    bisection on their difference.
    """
    hi = threshold_cap(w, params)
    if hi <= 0:
        lam = 0.0
    elif r_on(hi, w, params) >= r_off(hi, w, params):
        lam = hi
    else:
        lo = 0.0
        tol = 1e-9 * max(params.beta, 1e-300)
        for _ in range(max_iter):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if r_on(mid, w, params) >= r_off(mid, w, params):
                lo = mid
            else:
                hi = mid
        lam = lo
    ron = r_on(lam, w, params)
    roff = r_off(lam, w, params) if lam > 0 else 1.0
    return ThresholdResult(lam, ron, roff, ron)


def g_chasepp(a: float, w: float, params: SystemParams, lam: float | None = None) -> float:
    """CHASEpp's improvement term; its ratio bound is 3 - 2 g."""
    if a >= 1.0:
        return 1.0
    if lam is None:
        lam = optimal_threshold(w, params).lambda_star
    L, c_o, c_m, beta = params.L, params.c_o, params.c_m, params.beta
    scale = L * c_o + c_m / (1.0 - a)
    worst = 0.0
    for q in {0.0, w * c_m}:
        # free generation (c_o = c_m = 0) leaves only the startup charge
        extra = ((2 * w * c_m - q) * (L * c_o + c_m) + a * L * c_o * lam) / scale if scale > 0 else 0.0
        den = beta + extra
        if den > 0:
            worst = max(worst, (2 * beta - q) / den)
        elif 2 * beta - q > 0:
            worst = math.inf
    return a + (1.0 - a) * (1.0 - 0.5 * worst)


def cr_chasepp(w: float, params: SystemParams) -> float:
    return 3.0 - 2.0 * g_chasepp(alpha(params), w, params)


def cr_chasepp_plus(w: float, params: SystemParams) -> float:
    return min(cr_chasepp(w, params), 1.0 / alpha(params))


@dataclass(frozen=True)
class RatioReport:
    p_max: float
    w: float
    alpha: float
    lambda_star: float
    cr_chase: float
    cr_chaselk: float
    cr_chasepp: float
    cr_chasepp_plus: float
    r_off_limit: float  # r_off as the threshold grows without bound
    cr_lower: float | None = None
    delta1_star: float | None = None
    delta2_star: float | None = None


def ratio_report(w: float, params: SystemParams, lower=None) -> RatioReport:
    th = optimal_threshold(w, params)
    a = alpha(params)
    return RatioReport(
        p_max=params.p_max,
        w=w,
        alpha=a,
        lambda_star=th.lambda_star,
        cr_chase=cr_chase(params),
        cr_chaselk=cr_chaselk(w, params),
        cr_chasepp=3.0 - 2.0 * g_chasepp(a, w, params, th.lambda_star),
        cr_chasepp_plus=min(3.0 - 2.0 * g_chasepp(a, w, params, th.lambda_star), 1.0 / a),
        r_off_limit=params.full_price / params.c_o if params.c_o > 0 else math.inf,
        cr_lower=None if lower is None else lower.cr_lower,
        delta1_star=None if lower is None else lower.delta1_star,
        delta2_star=None if lower is None else lower.delta2_star,
    )


def adversary_chase(policy, params: SystemParams, T: int, w: int = 0):
    """Adaptive input that punishes the policy's last move.

    Full demand at the maximum price arrives while the policy is off and
    vanishes once it is on.  Only the current slot is revealed.
    """
    from .model import InputSlot, Trace
    from .online import PolicyState, PredictionWindow, make_policy
    from .segments import delta, step_capped

    if T < 1:
        raise ValueError("T must be at least 1")
    pol = make_policy(policy, params, w)
    state = PolicyState(0, 1, -params.beta)
    slots = []
    for t in range(1, T + 1):
        a = params.L if state.y_prev == 0 else 0.0
        slot = InputSlot(a, params.eta * a, params.p_max)
        slots.append(slot)
        state.t = t
        y = int(pol.decide(state, PredictionWindow((slot,), w)))
        state.capped_prefix = step_capped(state.capped_prefix, delta(slot, params), params.beta)
        state.y_prev = y
    return Trace(tuple(slots))


_LOWER = ("lower_bound", "lower_bound_at", "pr_s", "pr_curve", "r_on_lower", "r_off_lower",
          "realize_delta_trace", "LowerBoundResult", "DomainError", "RangeError")


def __getattr__(name):
    # lower-bound machinery lives in its own module; exposed here lazily to avoid an import cycle
    if name in _LOWER:
        from . import lower_bound as _lb
        return getattr(_lb, name)
    raise AttributeError(name)
