"""Improved equal-area criterion for the first swing of an LVRT event.

Three successive critical-clearing-angle (CCA) approximations:

1. classic equal areas between the during-fault and post-fault power curves;
2. the same energy balance with the frequency jumps at fault inception and
   clearing, leading to a scalar root-finding problem;
3. a damping correction integrated along the conservative orbits of (2).

A CCA becomes a critical clearing time (CCT) by following the during-fault
trajectory until it reaches the angle.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .integrate import IntegratorConfig, hermite_crossing, march
from .model import Scenario, SystemParams, _gse_field, derive_gse, equilibria, jump_fault_entry
from .numerics import adaptive_simpson, first_sign_change

__all__ = [
    "ArgOutOfRange",
    "NoRoot",
    "NeverReached",
    "EacInputs",
    "CcaReport",
    "CctReport",
    "eac_inputs",
    "cca_first",
    "energy_constants",
    "cca_second",
    "second_residual",
    "damping_integral",
    "cca_third",
    "swing_areas",
    "cct_from_cca",
    "analyze",
    "signed_error",
]

QUAD_TOL = 1e-10
CCT_SEARCH_LIMIT = 5.0  # s


class ArgOutOfRange(ValueError):
    """No critical angle at this approximation.

    Either the arccos argument left [-1, 1] or the angle falls outside the
    swing ``(phi_1, phi_3u)``.
    """

    def __init__(self, value: float, what: str):
        super().__init__(f"{what}: arccos argument {value:.6g} outside [-1, 1]")
        self.value = value


class NoRoot(ValueError):
    """The second-approximation residual keeps one sign over the bracket."""

    def __init__(self, lo: float, hi: float, g_lo: float, g_hi: float):
        super().__init__(
            f"no sign change on ({lo:.6g}, {hi:.6g}); residual {g_lo:.6g} .. {g_hi:.6g}"
        )
        self.endpoints = (lo, hi)
        self.residuals = (g_lo, g_hi)


class NeverReached(RuntimeError):
    """The during-fault trajectory peaks below the requested angle."""


@dataclass(frozen=True)
class EacInputs:
    phi_1: float
    phi_3u: float
    P_m2: float
    U_g2: float
    M: float
    k_ppll: float
    alpha_2: float
    alpha_3: float
    U_g1: float = 1.0

    def __post_init__(self):
        if not self.phi_1 < self.phi_3u:
            raise ValueError(f"need phi_1 < phi_3u, got {self.phi_1} >= {self.phi_3u}")
        if not self.U_g2 < self.U_g1:
            raise ValueError(f"need U_g2 < U_g1, got {self.U_g2} >= {self.U_g1}")
        if not self.P_m2 < self.U_g1:
            raise ValueError(f"post-fault UEP needs P_m2 < U_g1, got {self.P_m2}")


def eac_inputs(scenario: Scenario, params: SystemParams, constant_alpha: bool = False) -> EacInputs:
    """Collect the EAC quantities of a scenario.

    ``constant_alpha`` uses the during-fault damping ``k_ppll U_g2 / k_ipll`` on
    both orbit segments instead of scaling the post-fault one with ``U_g1``.
    """
    scenario.validate(params)
    phi_1 = equilibria(scenario.i_d1, scenario.U_g1, params.X_g).phi_s
    phi_3u = equilibria(scenario.i_d2, scenario.U_g1, params.X_g).phi_u
    alpha_2 = params.k_ppll * scenario.U_g2 / params.k_ipll
    alpha_3 = alpha_2 if constant_alpha else params.k_ppll * scenario.U_g1 / params.k_ipll
    return EacInputs(
        phi_1=phi_1,
        phi_3u=phi_3u,
        P_m2=scenario.i_d2 * params.X_g,
        U_g2=scenario.U_g2,
        M=1.0 / params.k_ipll,
        k_ppll=params.k_ppll,
        alpha_2=alpha_2,
        alpha_3=alpha_3,
        U_g1=scenario.U_g1,
    )


def _arccos_checked(x: float, what: str, inp: EacInputs) -> float:
    if not -1.0 <= x <= 1.0:
        raise ArgOutOfRange(x, what)
    phi = math.acos(x)
    if not inp.phi_1 < phi < inp.phi_3u:
        raise ArgOutOfRange(x, f"{what} (angle {phi:.6g} outside the swing)")
    return phi


def cca_first(inp: EacInputs) -> float:
    """Angle at which accelerating and decelerating areas balance, jumps ignored."""
    du = inp.U_g2 - inp.U_g1
    arg = (inp.U_g2 * math.cos(inp.phi_1) - inp.U_g1 * math.cos(inp.phi_3u)
           + inp.P_m2 * (inp.phi_1 - inp.phi_3u)) / du
    return _arccos_checked(arg, "first approximation", inp)


def swing_areas(inp: EacInputs, phi_cr: float, tol: float = QUAD_TOL) -> tuple[float, float]:
    """Accelerating area up to ``phi_cr`` and decelerating area beyond it, by quadrature."""
    e_ac = adaptive_simpson(lambda p: inp.P_m2 - inp.U_g2 * math.sin(p), inp.phi_1, phi_cr, tol)
    e_de = adaptive_simpson(lambda p: inp.U_g1 * math.sin(p) - inp.P_m2, phi_cr, inp.phi_3u, tol)
    return e_ac, e_de


def energy_constants(inp: EacInputs, omega_1: float) -> tuple[float, float]:
    """Conserved energies of the during-fault orbit through ``(phi_1, omega_1)``
    and of the post-fault orbit through the UEP."""
    h_2 = 0.5 * inp.M * omega_1 ** 2 - inp.P_m2 * inp.phi_1 - inp.U_g2 * math.cos(inp.phi_1)
    h_3 = -inp.P_m2 * inp.phi_3u - inp.U_g1 * math.cos(inp.phi_3u)
    return h_2, h_3


def _speed(radicand: float, M: float) -> float:
    return math.sqrt(max(2.0 * radicand / M, 0.0))


def fault_orbit_speed(inp: EacInputs, h_2: float, phi: float) -> float:
    """``omega`` on the conservative during-fault orbit at ``phi``."""
    return _speed(inp.P_m2 * phi + inp.U_g2 * math.cos(phi) + h_2, inp.M)


def post_orbit_speed(inp: EacInputs, h_3: float, phi: float) -> float:
    """``omega`` on the conservative post-fault orbit ending at the UEP."""
    return _speed(inp.P_m2 * phi + inp.U_g1 * math.cos(phi) + h_3, inp.M)


def second_residual(inp: EacInputs, h_2: float, h_3: float, phi: float) -> float:
    """Post-clearing speed minus pre-clearing speed minus the clearing jump."""
    return (post_orbit_speed(inp, h_3, phi) - fault_orbit_speed(inp, h_2, phi)
            - inp.k_ppll * (inp.U_g2 - inp.U_g1) * math.sin(phi))


def cca_second(inp: EacInputs, omega_1: float, scan_points: int = 4000) -> float:
    """Smallest angle at which clearing lands exactly on the post-fault stable boundary."""
    h_2, h_3 = energy_constants(inp, omega_1)
    lo, hi = inp.phi_1 + 1e-9, inp.phi_3u - 1e-9

    def g(p):
        return second_residual(inp, h_2, h_3, p)

    # beyond its turning point the fault orbit has no speed and clamped zeros would
    # pose as roots, so the search stops where the orbit stops
    grid = np.linspace(lo, hi, scan_points + 1)
    stalled = inp.P_m2 * grid + inp.U_g2 * np.cos(grid) + h_2 <= 0
    if stalled.any():
        k = int(np.argmax(stalled))
        if k == 0:
            raise NoRoot(lo, hi, g(lo), g(hi))
        hi = float(grid[k - 1])
        scan_points = k - 1 if k > 1 else 1
    bracket = first_sign_change(g, lo, hi, scan_points)
    if bracket is None:
        raise NoRoot(lo, hi, g(lo), g(hi))
    a, b, _, _ = bracket
    if a == b:
        return a
    return brentq(g, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=200)


def damping_integral(inp: EacInputs, phi_cr_2: float, h_2: float, h_3: float,
                     tol: float = QUAD_TOL) -> float:
    """Energy dissipated by ``alpha cos(phi) omega`` along the two conservative orbit pieces."""
    if not inp.phi_1 < phi_cr_2 < inp.phi_3u:
        raise ValueError(f"phi_cr_2={phi_cr_2} outside ({inp.phi_1}, {inp.phi_3u})")
    s = 0.0
    if inp.alpha_2 != 0.0:
        s += adaptive_simpson(lambda p: inp.alpha_2 * math.cos(p) * fault_orbit_speed(inp, h_2, p),
                              inp.phi_1, phi_cr_2, tol / 2)
    if inp.alpha_3 != 0.0:
        s += adaptive_simpson(lambda p: inp.alpha_3 * math.cos(p) * post_orbit_speed(inp, h_3, p),
                              phi_cr_2, inp.phi_3u, tol / 2)
    return s


def cca_third(inp: EacInputs, phi_cr_2: float, S_d: float) -> float:
    """Shift the second approximation by the damping energy."""
    arg = S_d / (inp.U_g2 - inp.U_g1) + math.cos(phi_cr_2)
    return _arccos_checked(arg, "third approximation", inp)


def cct_from_cca(phi_cr: float, scenario: Scenario, params: SystemParams,
                 cfg: IntegratorConfig = IntegratorConfig(), limit: float = CCT_SEARCH_LIMIT) -> float:
    """Fault duration after which the during-fault trajectory first reaches ``phi_cr``."""
    phi_1 = equilibria(scenario.i_d1, scenario.U_g1, params.X_g).phi_s
    if not phi_cr > phi_1:
        raise ValueError(f"phi_cr={phi_cr} must exceed phi_1={phi_1}")
    g = derive_gse(params, scenario.i_d2, scenario.U_g2)
    omega_1 = jump_fault_entry(scenario, params, phi_1)

    def f(y):
        return _gse_field(y[0], y[1], g.P_m, g.U_g, g.alpha, g.M)

    prev = [0.0, phi_1, omega_1]
    hit: list[float] = []

    def on_step(t, y):
        t0, p0, w0 = prev
        p1, w1 = float(y[0]), float(y[1])
        if p1 >= phi_cr:
            hit.append(hermite_crossing(t0, t, p0, p1, w0, w1, phi_cr, cfg.event_tol))
            return True
        if w0 > 0.0 >= w1:
            raise NeverReached(f"fault trajectory peaks at phi={p1:.6g} < {phi_cr:.6g}")
        prev[:] = [t, p1, w1]
        return False

    march(f, (phi_1, omega_1), 0.0, limit, cfg.step, on_step)
    if not hit:
        raise NeverReached(f"phi_cr={phi_cr:.6g} not reached within {limit} s")
    return hit[0]


def signed_error(approx: float | None, oracle: float | None) -> float | None:
    if approx is None or oracle is None:
        return None
    return (approx - oracle) / oracle


@dataclass
class CcaReport:
    phi_cr_1: float | None = None
    phi_cr_2: float | None = None
    phi_cr_3: float | None = None
    h_2: float | None = None
    h_3: float | None = None
    S_d: float | None = None
    oracle_phi_cr: float | None = None
    err_1: float | None = None
    err_2: float | None = None
    err_3: float | None = None

    def values(self) -> tuple:
        return self.phi_cr_1, self.phi_cr_2, self.phi_cr_3


@dataclass
class CctReport:
    t_cr_1: float | None = None
    t_cr_2: float | None = None
    t_cr_3: float | None = None
    oracle_t_cr: float | None = None
    oracle_status: str | None = None
    err_1: float | None = None
    err_2: float | None = None
    err_3: float | None = None
    failures: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def values(self) -> tuple:
        return self.t_cr_1, self.t_cr_2, self.t_cr_3


def analyze(scenario: Scenario, params: SystemParams, cfg: IntegratorConfig = IntegratorConfig(),
            with_oracle: bool = False, constant_alpha: bool = False) -> tuple[CcaReport, CctReport]:
    """All three approximations and their clearing times, optionally against the simulation oracle.

    Failures of individual steps are recorded in ``CctReport.failures`` keyed by
    step name; later steps that depend on a failed one are skipped.
    """
    from .sim import NoBracket, oracle_cct

    start = time.perf_counter()
    cca, cct = CcaReport(), CctReport()
    fails = cct.failures
    inp = eac_inputs(scenario, params, constant_alpha)
    omega_1 = jump_fault_entry(scenario, params, inp.phi_1)
    cca.h_2, cca.h_3 = energy_constants(inp, omega_1)

    def attempt(name, fn):
        try:
            return fn()
        except (ArgOutOfRange, NoRoot, NeverReached, ValueError, RuntimeError) as exc:
            fails[name] = f"{type(exc).__name__}: {exc}"
            return None

    cca.phi_cr_1 = attempt("phi_cr_1", lambda: cca_first(inp))
    cca.phi_cr_2 = attempt("phi_cr_2", lambda: cca_second(inp, omega_1))
    if cca.phi_cr_2 is not None:
        cca.S_d = attempt("S_d", lambda: damping_integral(inp, cca.phi_cr_2, cca.h_2, cca.h_3))
        if cca.S_d is not None:
            cca.phi_cr_3 = attempt("phi_cr_3", lambda: cca_third(inp, cca.phi_cr_2, cca.S_d))
    for k, phi in enumerate(cca.values(), start=1):
        if phi is not None:
            setattr(cct, f"t_cr_{k}", attempt(f"t_cr_{k}", lambda p=phi: cct_from_cca(p, scenario, params, cfg)))

    if with_oracle:
        try:
            res = oracle_cct(scenario, params, cfg)
            cct.oracle_t_cr, cca.oracle_phi_cr = res.t_cr, res.phi_cr
            cct.oracle_status = "ok"
        except NoBracket as exc:
            cct.oracle_status = str(exc)
        except RuntimeError as exc:
            cct.oracle_status = f"{type(exc).__name__}: {exc}"
        for k in (1, 2, 3):
            setattr(cca, f"err_{k}", signed_error(getattr(cca, f"phi_cr_{k}"), cca.oracle_phi_cr))
            setattr(cct, f"err_{k}", signed_error(getattr(cct, f"t_cr_{k}"), cct.oracle_t_cr))
    cct.wall_clock = time.perf_counter() - start
    return cca, cct
