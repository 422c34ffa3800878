"""Small numerical routines: adaptive Simpson quadrature and sign-change scanning."""
from __future__ import annotations

from typing import Callable

import numpy as np


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 60, panels: int = 8) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    The interval is first cut into ``panels`` equal pieces; each piece is then
    bisected until the Richardson estimate ``|S2 - S1| / 15`` meets its share
    of the tolerance. Endpoint square-root behaviour only costs extra depth.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    share = tol / panels
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo, hi = float(lo), float(hi)
        m = 0.5 * (lo + hi)
        flo, fm, fhi = f(lo), f(m), f(hi)
        stack = [(lo, hi, flo, fm, fhi, _simpson(flo, fm, fhi, lo, hi), share, 0)]
        while stack:
            x0, x1, f0, fmid, f1, whole, eps, depth = stack.pop()
            xm = 0.5 * (x0 + x1)
            xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x1)
            fl, fr = f(xl), f(xr)
            left = _simpson(f0, fl, fmid, x0, xm)
            right = _simpson(fmid, fr, f1, xm, x1)
            delta = left + right - whole
            if abs(delta) <= 15.0 * eps or depth >= max_depth or xm in (x0, x1):
                total += left + right + delta / 15.0
            else:
                stack.append((x0, xm, f0, fl, fmid, left, 0.5 * eps, depth + 1))
                stack.append((xm, x1, fmid, fr, f1, right, 0.5 * eps, depth + 1))
    return sign * total


def first_sign_change(g: Callable[[float], float], a: float, b: float, n: int = 4000):
    """Smallest sub-interval ``(x0, x1)`` of an ``n``-point scan where ``g`` changes sign.

    Returns ``(x0, x1, g(x0), g(x1))`` or ``None``. An exact zero on the grid is
    returned as a degenerate interval.
    """
    xs = np.linspace(a, b, n + 1)
    x_prev, g_prev = float(xs[0]), g(float(xs[0]))
    if g_prev == 0.0:
        return x_prev, x_prev, 0.0, 0.0
    for x in xs[1:]:
        x = float(x)
        gx = g(x)
        if gx == 0.0:
            return x, x, 0.0, 0.0
        if (gx > 0) != (g_prev > 0):
            return x_prev, x, g_prev, gx
        x_prev, g_prev = x, gx
    return None
