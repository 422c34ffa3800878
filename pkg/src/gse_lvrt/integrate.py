"""Fixed-step RK4 and adaptive RK45 marching over tuple-valued states.

States are tuples whose entries are floats or equally shaped arrays. Fixed-step
marching stays on the global grid ``t = k * step`` so that switching instants
placed on the grid are hit exactly, and off-grid instants get one short step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

__all__ = ["IntegratorConfig", "StepUnderflow", "rk4_step", "march", "hermite_crossing"]

State = tuple
Field = Callable[[State], State]


class StepUnderflow(RuntimeError):
    """Adaptive step fell below 1e-12 s."""


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-4
    method: str = "RK4"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    event_tol: float = 1e-6

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.method not in ("RK4", "RK45"):
            raise ValueError(f"method must be 'RK4' or 'RK45', got {self.method!r}")
        if self.event_tol > self.step:
            raise ValueError("event_tol must not exceed step")

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.step / 2, self.method, self.rel_tol, self.abs_tol,
                                min(self.event_tol, self.step / 2))


def rk4_step(f: Field, y: State, h: float) -> State:
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * h * b for a, b in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * h * b for a, b in zip(y, k2)))
    k4 = f(tuple(a + h * b for a, b in zip(y, k3)))
    return tuple(a + (h / 6.0) * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4))


def _grid_times(t0: float, t1: float, h: float) -> list[float]:
    """Step end points from ``t0`` to ``t1`` on the grid ``k*h`` (both ends included as needed)."""
    k0 = math.floor(t0 / h + 1e-9) + 1
    if abs(k0 * h - t0) <= 1e-9 * h:
        k0 += 1
    k1 = math.floor(t1 / h + 1e-9)
    times = [k * h for k in range(k0, k1 + 1) if k * h < t1 - 1e-9 * h]
    times.append(t1)
    return times


def march(f: Field, y: State, t0: float, t1: float, h: float,
          on_step: Callable[[float, State], bool] | None = None):
    """RK4 from ``t0`` to ``t1``; ``on_step(t, y)`` returning True stops early.

    Returns ``(t, y, stopped)``.
    """
    t = t0
    for t_next in _grid_times(t0, t1, h):
        y = rk4_step(f, y, t_next - t)
        t = t_next
        if on_step is not None and on_step(t, y):
            return t, y, True
    return t, y, False


def march_adaptive(f: Field, y: State, t0: float, t1: float, h: float, rtol: float, atol: float,
                   on_step: Callable[[float, State], bool] | None = None):
    """RK45 (scipy) from ``t0`` to ``t1``, reporting on the same grid as :func:`march`."""
    sizes = [np.size(c) for c in y]
    shapes = [np.shape(c) for c in y]

    def pack(state):
        return np.concatenate([np.ravel(np.asarray(c, dtype=float)) for c in state])

    def unpack(vec):
        out, i = [], 0
        for n, shp in zip(sizes, shapes):
            part = vec[i:i + n]
            out.append(float(part[0]) if shp == () else part.reshape(shp))
            i += n
        return tuple(out)

    sol = solve_ivp(lambda _t, v: pack(f(unpack(v))), (t0, t1), pack(y), method="RK45",
                    rtol=rtol, atol=atol, dense_output=True, first_step=min(h, t1 - t0))
    if sol.status != 0:
        raise StepUnderflow(f"adaptive integration failed at t={sol.t[-1]:.6g}: {sol.message}")
    if np.any(np.diff(sol.t) < 1e-12):
        raise StepUnderflow("adaptive step fell below 1e-12 s")
    t = t0
    for t_next in _grid_times(t0, t1, h):
        y = unpack(sol.sol(t_next))
        t = t_next
        if on_step is not None and on_step(t, y):
            return t, y, True
    return t, unpack(sol.y[:, -1]), False


def hermite_crossing(t0: float, t1: float, x0: float, x1: float, v0: float, v1: float,
                     level: float, tol: float) -> float:
    """First time in ``[t0, t1]`` where the cubic Hermite interpolant of ``x`` hits ``level``.

    ``v0, v1`` are the end-point derivatives. Bisection on the interpolant to ``tol``.
    """
    h = t1 - t0

    def x_at(s):
        u = (s - t0) / h
        h00 = 2 * u ** 3 - 3 * u ** 2 + 1
        h10 = u ** 3 - 2 * u ** 2 + u
        h01 = -2 * u ** 3 + 3 * u ** 2
        h11 = u ** 3 - u ** 2
        return h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1 - level

    # locate the first sign change on a fine sub-grid, then bisect
    n = 16
    grid = [t0 + h * i / n for i in range(n + 1)]
    lo = t0
    f_lo = x_at(lo)
    if f_lo == 0:
        return t0
    hi = t1
    for s in grid[1:]:
        fs = x_at(s)
        if fs == 0:
            return s
        if (fs > 0) != (f_lo > 0):
            hi = s
            break
        lo, f_lo = s, fs
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = x_at(mid)
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stack_states(states: Sequence[State]) -> State:
    return tuple(np.array(c) for c in zip(*states))
