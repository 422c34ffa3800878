"""Domain types and right-hand sides of the unified LVRT switching model.

The converter's PLL angle mismatch ``phi`` and frequency deviation ``omega``
obey a generalized swing equation (GSE)::

    dphi/dt   = omega
    M domega/dt = P_m - U_g sin(phi) - alpha cos(phi) omega

with ``M = 1/k_ipll``, ``P_m = i_d X_g`` and ``alpha = k_ppll U_g / k_ipll``.
Stages 1, 2 and 3 of a low-voltage ride-through differ only in ``(U_g, i_d)``;
the early-recovery stage additionally ramps ``i_d`` back to its pre-fault
value while the terminal-voltage controller (TVC) sets ``i_q``.

All right-hand sides accept either floats or equally shaped numpy arrays, so
the same code drives single trajectories and vectorized grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

__all__ = [
    "LVRT_ENTRY_THRESHOLD",
    "NoEquilibrium",
    "AlgebraicLoopDiverged",
    "SystemParams",
    "GseParams",
    "Scenario",
    "PllState",
    "Stage3State",
    "Equilibria",
    "ResponseOutput",
    "derive_gse",
    "equilibria",
    "gse_rhs",
    "pll_form_rhs",
    "stage3_driving_rhs",
    "stage3_response_step",
    "terminal_voltage",
    "prefault_reactive_current",
    "default_iq2",
    "jump_fault_entry",
    "jump_fault_clear",
    "REFERENCE_PARAMS",
    "reference_scenario",
]

# Terminal voltage (pu) below which the switching control engages.
LVRT_ENTRY_THRESHOLD = {"wind": 0.8, "pv": 0.9}


class NoEquilibrium(ValueError):
    """Raised when ``i_d X_g > U_g``: the operating point cannot synchronize."""


class AlgebraicLoopDiverged(RuntimeError):
    """Raised when the TVC algebraic loop ``i_q = K_pV U_t + z_q`` fails to converge."""


@dataclass(frozen=True)
class SystemParams:
    """Per-unit electrical and control constants of one converter."""

    X_g: float = 0.5
    k_ppll: float = 74.0
    k_ipll: float = 2800.0
    K_ramp: float = 3.0  # pu/s
    K_pV: float = 0.5
    K_iV: float = 20.0
    U_tref: float = 1.0
    I_max: float = 1.2
    omega_0: float = 2 * math.pi * 50.0

    def __post_init__(self):
        if not self.X_g > 0:
            raise ValueError(f"X_g must be positive, got {self.X_g}")
        if not self.k_ipll > 0:
            raise ValueError(f"k_ipll must be positive, got {self.k_ipll}")
        if not self.k_ppll >= 0:
            raise ValueError(f"k_ppll must be non-negative, got {self.k_ppll}")
        if not self.K_ramp > 0:
            raise ValueError(f"K_ramp must be positive, got {self.K_ramp}")
        if not self.I_max > 0:
            raise ValueError(f"I_max must be positive, got {self.I_max}")
        if not 0 < self.U_tref <= 1.2:
            raise ValueError(f"U_tref must lie in (0, 1.2], got {self.U_tref}")

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class GseParams:
    M: float
    P_m: float
    U_g: float
    alpha: float


@dataclass(frozen=True)
class Scenario:
    """Three-stage fault experiment.

    ``i_q2`` of ``None`` selects the grid-code rule in :func:`default_iq2`.
    ``t_clear`` is ``None`` when the clearing time is the unknown.
    ``device`` only selects the LVRT entry threshold reported as metadata.
    """

    U_g2: float
    i_d2: float
    i_d1: float = 1.0
    U_g1: float = 1.0
    i_q2: float | None = None
    t_fault: float = 0.1
    t_clear: float | None = None
    device: str = "wind"

    def validate(self, params: SystemParams) -> None:
        if not 0 <= self.U_g2 < self.U_g1:
            raise ValueError(f"need 0 <= U_g2 < U_g1, got U_g2={self.U_g2}, U_g1={self.U_g1}")
        if self.i_d1 * params.X_g > self.U_g1:
            raise NoEquilibrium(f"pre-fault point i_d1*X_g={self.i_d1 * params.X_g:.6g} > U_g1")
        if self.i_d2 * params.X_g > self.U_g1:
            raise NoEquilibrium(f"post-fault point i_d2*X_g={self.i_d2 * params.X_g:.6g} > U_g1")
        if self.i_q2 is not None and math.hypot(self.i_d2, self.i_q2) > params.I_max * (1 + 1e-12):
            raise ValueError("during-fault current exceeds I_max")
        if self.t_clear is not None and not self.t_clear > self.t_fault:
            raise ValueError(f"t_clear ({self.t_clear}) must exceed t_fault ({self.t_fault})")
        if self.device not in LVRT_ENTRY_THRESHOLD:
            raise ValueError(f"unknown device {self.device!r}")

    @property
    def lvrt_threshold(self) -> float:
        return LVRT_ENTRY_THRESHOLD[self.device]

    @property
    def fault_duration(self) -> float | None:
        return None if self.t_clear is None else self.t_clear - self.t_fault

    def with_clearing(self, duration: float) -> "Scenario":
        return replace(self, t_clear=self.t_fault + duration)

    def replace(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class PllState:
    phi: float
    omega: float


@dataclass(frozen=True)
class Stage3State:
    phi: float
    omega: float
    i_d: float
    z_q: float


@dataclass(frozen=True)
class Equilibria:
    phi_s: float
    phi_u: float


class ResponseOutput(NamedTuple):
    i_q: float
    U_t: float
    dz_q: float


def derive_gse(params: SystemParams, i_d: float, U_g: float) -> GseParams:
    return GseParams(
        M=1.0 / params.k_ipll,
        P_m=i_d * params.X_g,
        U_g=U_g,
        alpha=params.k_ppll * U_g / params.k_ipll,
    )


def equilibria(i_d: float, U_g: float, X_g: float) -> Equilibria:
    """Stable and unstable equilibrium angles of the frozen GSE."""
    if not U_g > 0:
        raise NoEquilibrium(f"U_g must be positive, got {U_g}")
    ratio = i_d * X_g / U_g
    if ratio > 1.0:
        raise NoEquilibrium(f"i_d*X_g/U_g = {ratio:.6g} > 1")
    phi_s = math.asin(ratio)
    return Equilibria(phi_s=phi_s, phi_u=math.pi - phi_s)


def _gse_field(phi, omega, P_m, U_g, alpha, M):
    return omega, (P_m - U_g * np.sin(phi) - alpha * np.cos(phi) * omega) / M


def gse_rhs(state: PllState, g: GseParams):
    """Time derivative ``(dphi/dt, domega/dt)`` of the GSE."""
    return _gse_field(state.phi, state.omega, g.P_m, g.U_g, g.alpha, g.M)


def pll_form_rhs(state: PllState, params: SystemParams, i_d: float, U_g: float):
    """The same derivative written directly from the PLL loop with constant ``i_d``.

    ``domega/dt = k_ppll d(u_tq)/dt + k_ipll u_tq`` with ``u_tq = i_d X_g - U_g sin(phi)``.
    """
    phi, omega = state.phi, state.omega
    du_tq = -U_g * np.cos(phi) * omega
    u_tq = i_d * params.X_g - U_g * np.sin(phi)
    return omega, params.k_ppll * du_tq + params.k_ipll * u_tq


def _ramp_rate(i_d, i_d_target, K_ramp):
    return np.sign(i_d_target - i_d) * K_ramp


def _driving_field(phi, omega, i_d, ramp, U_g, X_g, k_ppll, k_ipll):
    domega = k_ppll * (ramp * X_g - U_g * np.cos(phi) * omega) + k_ipll * (i_d * X_g - U_g * np.sin(phi))
    return omega, domega, ramp


def stage3_driving_rhs(state: Stage3State, params: SystemParams, U_g: float, i_d_target: float):
    """PLL plus active-current ramp; returns ``(dphi, domega, di_d)``.

    Independent of ``i_q`` and ``z_q``. Once ``i_d`` equals the target the
    ramp term vanishes and the field reduces to the GSE with constant ``i_d``.
    """
    ramp = _ramp_rate(state.i_d, i_d_target, params.K_ramp)
    return _driving_field(state.phi, state.omega, state.i_d, ramp, U_g,
                          params.X_g, params.k_ppll, params.k_ipll)


def terminal_voltage(phi, i_d, i_q, U_g, X_g):
    """Terminal voltage magnitude from ``u_td = -i_q X_g + U_g cos(phi)`` and ``u_tq``."""
    u_td = -i_q * X_g + U_g * np.cos(phi)
    u_tq = i_d * X_g - U_g * np.sin(phi)
    return np.hypot(u_td, u_tq)


def _solve_tvc_loop_scalar(phi, i_d, z_q, U_g, params: SystemParams, tol, max_iter):
    X_g, K_pV = params.X_g, params.K_pV
    a = U_g * math.cos(phi)
    b = i_d * X_g - U_g * math.sin(phi)
    i_q = z_q + K_pV * math.hypot(a - z_q * X_g, b)
    for _ in range(max_iter):
        u_td = a - i_q * X_g
        U_t = math.hypot(u_td, b)
        dF = 1.0 + (K_pV * X_g * u_td / U_t if U_t > 0 else 0.0)
        step = (i_q - K_pV * U_t - z_q) / dF
        i_q -= step
        if abs(step) <= tol * max(1.0, abs(i_q)):
            break
    else:
        raise AlgebraicLoopDiverged(
            f"TVC loop did not converge in {max_iter} iterations (K_pV*X_g={K_pV * X_g:.3g})"
        )
    bound = math.sqrt(max(params.I_max ** 2 - i_d ** 2, 0.0))
    clamped = min(max(i_q, -bound), bound)
    return clamped, math.hypot(a - clamped * X_g, b), clamped != i_q


def _solve_tvc_loop(phi, i_d, z_q, U_g, params: SystemParams, tol=1e-12, max_iter=50):
    """Newton solve of ``i_q - K_pV U_t(i_q) - z_q = 0`` followed by the current clamp."""
    if np.ndim(phi) == 0 and np.ndim(i_d) == 0 and np.ndim(z_q) == 0:
        return _solve_tvc_loop_scalar(float(phi), float(i_d), float(z_q), U_g, params, tol, max_iter)
    X_g, K_pV = params.X_g, params.K_pV
    a = U_g * np.cos(phi)
    b = i_d * X_g - U_g * np.sin(phi)
    i_q = z_q + K_pV * np.hypot(a - z_q * X_g, b)
    for _ in range(max_iter):
        u_td = a - i_q * X_g
        U_t = np.hypot(u_td, b)
        F = i_q - K_pV * U_t - z_q
        safe = np.where(U_t > 0, U_t, 1.0)
        dF = 1.0 + K_pV * X_g * np.where(U_t > 0, u_td / safe, 0.0)
        step = F / dF
        i_q = i_q - step
        if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(i_q))):
            break
    else:
        raise AlgebraicLoopDiverged(
            f"TVC loop did not converge in {max_iter} iterations (K_pV*X_g={K_pV * X_g:.3g})"
        )
    bound = np.sqrt(np.maximum(params.I_max ** 2 - i_d ** 2, 0.0))
    clamped = np.clip(i_q, -bound, bound)
    return clamped, np.hypot(a - clamped * X_g, b), clamped != i_q


def stage3_response_step(state: Stage3State, params: SystemParams, U_g: float) -> ResponseOutput:
    """Algebraically consistent ``(i_q, U_t)`` and the integrator rate ``dz_q/dt``.

    While the current limit holds ``i_q`` at its bound the integrator is frozen
    if integrating would push further into the limit.
    """
    i_q, U_t, clamped = _solve_tvc_loop(state.phi, state.i_d, state.z_q, U_g, params)
    dz = params.K_iV * (U_t - params.U_tref)
    if isinstance(i_q, float):
        if clamped and (dz > 0 if i_q > 0 else dz < 0):
            dz = 0.0
        return ResponseOutput(i_q, U_t, dz)
    # anti-windup: stop integrating into the limit
    pushing = np.where(i_q > 0, dz > 0, dz < 0)
    dz = np.where(clamped & pushing, 0.0, dz)
    if np.ndim(dz) == 0:
        return ResponseOutput(float(i_q), float(U_t), float(dz))
    return ResponseOutput(i_q, U_t, dz)


def prefault_reactive_current(params: SystemParams, i_d1: float, U_g1: float, phi_1: float) -> float:
    """Stage-1 reactive current holding ``U_t = U_tref`` (clamped to the current limit)."""
    i_q = (U_g1 * math.cos(phi_1) - params.U_tref) / params.X_g
    bound = math.sqrt(max(params.I_max ** 2 - i_d1 ** 2, 0.0))
    return min(max(i_q, -bound), bound)


def default_iq2(params: SystemParams, scenario: Scenario, phi_1: float) -> float:
    """Grid-code reactive current during the fault.

    ``i_q2 = -min(1.5 (0.9 - U_t_dip), sqrt(I_max^2 - i_d2^2))`` where ``U_t_dip``
    is the terminal voltage just after fault entry with the pre-fault ``i_q``.
    A dip shallower than 0.9 pu gives no support.
    """
    i_q1 = prefault_reactive_current(params, scenario.i_d1, scenario.U_g1, phi_1)
    U_t_dip = float(terminal_voltage(phi_1, scenario.i_d2, i_q1, scenario.U_g2, params.X_g))
    headroom = math.sqrt(max(params.I_max ** 2 - scenario.i_d2 ** 2, 0.0))
    return -min(max(1.5 * (0.9 - U_t_dip), 0.0), headroom)


def jump_fault_entry(scenario: Scenario, params: SystemParams, phi_1: float) -> float:
    """Frequency deviation right after fault inception.

    The step in ``u_tq`` passes through the PLL proportional path:
    ``omega_1 = k_ppll [(i_d2 - i_d1) X_g - (U_g2 - U_g1) sin(phi_1)]``.
    """
    du_tq = (scenario.i_d2 - scenario.i_d1) * params.X_g - (scenario.U_g2 - scenario.U_g1) * math.sin(phi_1)
    return params.k_ppll * du_tq


def jump_fault_clear(params: SystemParams, U_g2: float, phi_c: float, omega_2: float, U_g1: float = 1.0) -> float:
    """Frequency deviation right after the voltage recovers (downward for ``phi_c`` in (0, pi))."""
    return omega_2 + params.k_ppll * (U_g2 - U_g1) * math.sin(phi_c)


# Reference set: X_g and i_d1 reproduce the first-approximation angles of the
# published comparison cases, k_ppll/sqrt(k_ipll) ~ 1.40 the second and third,
# k_ipll sets the time scale of the clearing times, and K_ramp is slow enough
# that the post-clearing basin barely moves during the ramp.
REFERENCE_PARAMS = SystemParams()


def reference_scenario(U_g2: float = 0.2, i_d2: float = 0.4, t_clear: float | None = None) -> Scenario:
    return Scenario(U_g2=U_g2, i_d2=i_d2, i_d1=1.0, U_g1=1.0, t_fault=0.1, t_clear=t_clear)
