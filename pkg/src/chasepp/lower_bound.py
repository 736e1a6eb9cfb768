"""Lower bound on the competitive ratio of any deterministic lookahead policy.

The adversary feeds a large differential cost ``delta1`` until a counter of
consecutive off-slots passes ``(beta - w*delta2)/delta1`` and ``delta2``
afterwards.  ``pr_s`` is the performance ratio forced on a policy that turns
on at slot ``s``; the bound maximises, over ``delta2``, the smaller of the best
on-ratio (over ``delta1``) and the stay-off ratio.  Slots are refined by an
integer factor until the bound stops moving, approximating the
continuous-time limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .model import SystemParams, Trace
from .ratio import alpha
from .search import golden_section_max


class DomainError(ValueError):
    pass


class RangeError(ValueError):
    pass


def refine(params: SystemParams, k: int) -> SystemParams:
    """Parameters for slots 1/k as long: per-slot running cost and energy shrink."""
    if k == 1:
        return params
    return replace(params, c_m=params.c_m / k, L=params.L / k)


def max_delta(params: SystemParams) -> float:
    return params.L * (params.full_price - params.c_o) - params.c_m


def _split(delta1: float, delta2: float, w: int, beta: float) -> int:
    """Last slot that still receives delta1 (the counter threshold, floored)."""
    K = (beta - w * delta2) / delta1
    return int(math.floor(K + 1e-9 * max(1.0, K)))


def _q(t, kf: int, delta1: float, delta2: float, beta: float):
    t = np.asarray(t, dtype=float)
    q = np.where(t <= kf, t * delta1, kf * delta1 + (t - kf) * delta2)
    return np.minimum(q, beta)


def _pr(s, kf, delta1, delta2, w, params):
    P = params.full_price
    C = P / (P - params.c_o)
    beta = params.beta
    qs = _q(s, kf, delta1, delta2, beta)
    qsw = _q(np.asarray(s) + w, kf, delta1, delta2, beta)
    num = beta - (qsw - qs) + np.maximum(qsw - w * params.c_m, 0.0)
    den = C * ((np.asarray(s) + w) * params.c_m + qsw)
    return 1.0 + num / den


def pr_s(s: int, delta1: float, delta2: float, w: int, params: SystemParams) -> float:
    """Performance ratio when the policy turns on at slot ``s`` of the adversarial input."""
    if delta1 <= 0:
        raise DomainError("delta1 must be positive")
    kf = _split(delta1, delta2, w, params.beta)
    if not 1 <= s <= kf:
        raise DomainError(f"s={s} outside [1, {kf}]")
    return float(_pr(s, kf, delta1, delta2, w, params))


def pr_curve(delta1: float, delta2: float, w: int, params: SystemParams) -> np.ndarray:
    """PR(s) for every admissible s; index 0 is s = 1."""
    kf = _split(delta1, delta2, w, params.beta)
    if kf < 1:
        return np.empty(0)
    return _pr(np.arange(1, kf + 1), kf, delta1, delta2, w, params)


def r_on_lower(delta1: float, delta2: float, w: int, params: SystemParams) -> float:
    """min over s of PR(s).

    PR is linear-fractional in s between its breakpoints (the counter switch
    seen from s + w, and the point where the window benefit equals w*c_m), so
    the minimum sits at a breakpoint neighbour or an end of the range.
    """
    if delta1 <= 0:
        return -math.inf
    beta = params.beta
    kf = _split(delta1, delta2, w, beta)
    if kf < 1:
        return -math.inf
    wc = w * params.c_m
    cands = [1.0, float(kf), float(kf - w), float(kf - w + 1)]
    cands.append(wc / delta1 - w)
    if delta2 > 0:
        cands.append((wc - kf * delta1) / delta2 + kf - w)
    pts = set()
    for c in cands:
        if not math.isfinite(c):
            continue
        for s in (math.floor(c), math.ceil(c)):
            pts.add(min(max(int(s), 1), kf))
    s = np.fromiter(pts, dtype=float)
    return float(np.min(_pr(s, kf, delta1, delta2, w, params)))


def r_off_lower(delta2: float, params: SystemParams) -> float:
    a = alpha(params)
    lc = params.L * params.c_o
    return (params.c_m + delta2) / (params.c_m + lc * a / (lc + params.c_m) * delta2)


@dataclass(frozen=True)
class LowerBoundResult:
    delta1_star: float  # per original slot
    delta2_star: float  # per original slot
    cr_lower: float
    r_on_at: float
    refinement: int


def _delta1_bounds(delta2: float, w: int, params: SystemParams) -> tuple[float, float]:
    hi = max_delta(params)
    if w > 0:
        hi = min(hi, (params.beta - w * delta2) / w)
    hi = min(hi, params.beta - w * delta2)  # at least one admissible turn-on slot
    return delta2, hi


def best_delta1(delta2: float, w: int, params: SystemParams, rtol: float = 1e-6) -> tuple[float, float]:
    """delta1 maximising r_on_lower for fixed delta2: coarse scan, then golden section."""
    lo, hi = _delta1_bounds(delta2, w, params)
    if hi <= 0 or hi < lo:
        return lo, -math.inf
    lo = max(lo, hi * 1e-9)
    f = lambda d1: r_on_lower(d1, delta2, w, params)
    grid = np.linspace(lo, hi, 33)
    vals = [f(x) for x in grid]
    i = int(np.argmax(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    x, fx = golden_section_max(f, a, b, rtol=rtol)
    if vals[i] > fx:
        return float(grid[i]), vals[i]
    return x, fx


def _delta2_upper(w: int, params: SystemParams) -> float:
    ub = max_delta(params)
    if w > 0:
        ub = min(ub, params.beta / (2 * w))
    return max(ub, 0.0)


def lower_bound_at(w: float, params: SystemParams, refinement: int = 1, grid: int = 1000) -> LowerBoundResult:
    k = int(refinement)
    wk = w * k
    W = int(round(wk))
    if abs(W - wk) > 1e-9:
        raise ValueError(f"w={w} is not a whole number of 1/{k} slots")
    rp = refine(params, k)
    ub = _delta2_upper(W, rp)

    def gap(d2):
        d1, ron = best_delta1(d2, W, rp)
        return ron - r_off_lower(d2, rp), d1, ron

    xs = np.linspace(0.0, ub, grid + 1)
    prev = None
    found = None
    for x in xs:
        g, d1, ron = gap(x)
        if g < 0:
            found = (prev, (x, d1, ron))
            break
        prev = (x, d1, ron)
    if found is None:
        d2, d1, ron = prev
    elif found[0] is None:
        d2, d1, ron = 0.0, found[1][1], found[1][2]
    else:
        lo, hi = found[0][0], found[1][0]
        d1, ron = found[0][1], found[0][2]
        for _ in range(100):
            if hi - lo <= 1e-12 * max(ub, 1e-300):
                break
            mid = 0.5 * (lo + hi)
            g, m1, mron = gap(mid)
            if g >= 0:
                lo, d1, ron = mid, m1, mron
            else:
                hi = mid
        d2 = lo
    return LowerBoundResult(float(d1 * k), float(d2 * k), float(r_off_lower(d2, rp)), float(ron), k)


def _no_window(params: SystemParams) -> LowerBoundResult:
    """Without lookahead the bound is the single-threshold value 3 - 2 alpha.

    The adversary then uses the steepest climb, and delta2 is read back from
    the stay-off ratio at that value.
    """
    cr = 3.0 - 2.0 * alpha(params)
    lc = params.L * params.c_o
    r = lc * alpha(params) / (lc + params.c_m)
    d1 = max_delta(params)
    d2 = params.c_m * (cr - 1.0) / (1.0 - cr * r) if cr * r < 1.0 else d1
    return LowerBoundResult(float(d1), float(min(d2, d1)), cr, cr, 0)


def _first_refinement(w: float) -> int:
    frac = Fraction(w).limit_denominator(1 << 20)
    k = 1
    while (frac * k).denominator != 1:
        k *= 2
        if k > 1 << 20:
            raise ValueError(f"w={w} needs a dyadic slot length")
    return k


def lower_bound(
    w: float,
    params: SystemParams,
    refinement: int | None = None,
    tol: float = 1e-4,
    max_refinement: int = 1 << 12,
    grid: int = 1000,
) -> LowerBoundResult:
    """Lower bound cr(w); doubles the slot refinement until it moves by less than ``tol``.

    One small step is not enough: near w = 0 the sequence creeps at a steady
    rate just under ``tol``, so two consecutive small steps are required.
    """
    if w < 0:
        raise ValueError("w must be non-negative")
    if w == 0:
        return _no_window(params)
    if refinement is not None:
        return lower_bound_at(w, params, refinement, grid)
    k = _first_refinement(w)
    cur = lower_bound_at(w, params, k, grid)
    calm = 0
    while k < max_refinement:
        k *= 2
        nxt = lower_bound_at(w, params, k, grid)
        calm = calm + 1 if abs(nxt.cr_lower - cur.cr_lower) < tol else 0
        cur = nxt
        if calm == 2:
            break
    return cur


def realize_delta_trace(deltas, params: SystemParams) -> Trace:
    """Concrete slots at the maximum price whose differential cost is each given value."""
    P = params.full_price
    span = P - params.c_o
    lo, hi = -params.c_m, max_delta(params)
    tol = 1e-9 * max(1.0, abs(hi), abs(lo))
    a = []
    for i, d in enumerate(deltas):
        if d < lo - tol or d > hi + tol:
            raise RangeError(f"delta {d} at position {i} outside [{lo}, {hi}]")
        x = (d + params.c_m) / span if span > 0 else 0.0
        a.append(min(max(x, 0.0), params.L))
    a = np.array(a)
    return Trace.from_arrays(a, params.eta * a, params.p_max)
