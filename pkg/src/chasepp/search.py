"""Scalar searches used by the bound computations."""
from __future__ import annotations

import math

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo: float, hi: float, rtol: float = 1e-6, max_iter: int = 200):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max).

    Stops once the bracket is narrower than ``rtol`` times its magnitude.
    The end points are compared too, so monotone functions are handled.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= rtol * max(abs(a), abs(b), 1e-300):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
    best = max([(f1, x1), (f2, x2), (f(lo), lo), (f(hi), hi)])
    return best[1], best[0]
