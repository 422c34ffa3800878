"""Time-domain simulation of the four-stage LVRT sequence and the clearing-time oracle.

Stage 1 holds the pre-fault equilibrium. At ``t_fault`` the PLL frequency
jumps and the during-fault GSE ``(U_g2, i_d2)`` runs until ``t_clear``, where a
second jump occurs. Stage 3 ramps ``i_d`` back to ``i_d1`` with the TVC active;
stage 4 starts exactly when the ramp completes.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .integrate import IntegratorConfig, _grid_times, march, march_adaptive, rk4_step
from .model import (
    Equilibria,
    GseParams,
    PllState,
    Scenario,
    SystemParams,
    _driving_field,
    _gse_field,
    default_iq2,
    derive_gse,
    equilibria,
    jump_fault_clear,
    jump_fault_entry,
    prefault_reactive_current,
    stage3_response_step,
    Stage3State,
    terminal_voltage,
)

__all__ = [
    "Reason",
    "StabilityVerdict",
    "JumpRecord",
    "Trajectory",
    "BasinMap",
    "FarmSpec",
    "OracleResult",
    "NoBracket",
    "NonMonotoneStability",
    "PHI_MARGIN",
    "OMEGA_LIMIT",
    "PHI_TOL",
    "OMEGA_TOL",
    "simulate_gse",
    "simulate_gse_batch",
    "simulate_scenario",
    "classify_stability",
    "verdict_from_stage3_entry",
    "oracle_cct",
    "basin_map",
    "basin_cells",
    "basin_from_codes",
    "fate_at_stage3_entry",
    "aggregate_farm",
    "ramp_duration",
]

log = logging.getLogger(__name__)

PHI_TOL = 0.02  # rad, settled band around the stage-4 SEP
OMEGA_TOL = 0.01  # rad/s
PHI_MARGIN = 0.5  # rad beyond the UEP counts as a slip
OMEGA_LIMIT = 500.0  # rad/s; recoverable swings of the reference set peak near 90 rad/s
SETTLE_WINDOW = 0.2  # s


class Reason(enum.Enum):
    CONVERGED = "ConvergedToSEP"
    PHI_EXCEEDED = "PhiExceededUEP"
    OMEGA_DIVERGED = "OmegaDiverged"
    TIMEOUT = "Timeout"


_REASONS = list(Reason)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    reason: Reason
    final_state: PllState
    t: float = math.nan

    def __post_init__(self):
        if self.stable != (self.reason is Reason.CONVERGED):
            raise ValueError("stable verdicts must carry reason ConvergedToSEP")


@dataclass(frozen=True)
class JumpRecord:
    """A stage switch. ``before`` holds the full pre-switch sample row."""

    t: float
    omega_before: float
    omega_after: float
    from_stage: int
    to_stage: int
    before: tuple = ()


@dataclass
class Trajectory:
    t: np.ndarray
    stage: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    U_t: np.ndarray
    jumps: list[JumpRecord] = field(default_factory=list)

    COLUMNS = ("t", "stage", "phi", "omega", "i_d", "i_q", "U_t")

    def __len__(self):
        return len(self.t)

    def rows(self, with_jumps: bool = True):
        """Sample rows; each jump adds its pre-switch row just before the post-switch one."""
        pending = {round(j.t, 12): j for j in self.jumps} if with_jumps else {}
        for k in range(len(self.t)):
            j = pending.get(round(float(self.t[k]), 12))
            if j is not None and j.before:
                yield j.before
            yield (float(self.t[k]), int(self.stage[k]), float(self.phi[k]), float(self.omega[k]),
                   float(self.i_d[k]), float(self.i_q[k]), float(self.U_t[k]))

    def segment(self, stages) -> "Trajectory":
        mask = np.isin(self.stage, list(stages))
        return Trajectory(*(getattr(self, c)[mask] for c in self.COLUMNS),
                          jumps=[j for j in self.jumps if j.to_stage in stages])


class _Recorder:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, t, stage, phi, omega, i_d, i_q, U_t):
        self.rows.append((t, stage, float(phi), float(omega), float(i_d), float(i_q), float(U_t)))

    def pop(self) -> tuple:
        return self.rows.pop()

    def build(self, jumps) -> Trajectory:
        if self.rows:
            cols = list(zip(*self.rows))
        else:
            cols = [()] * 7
        arrays = [np.asarray(c, dtype=float) for c in cols]
        arrays[1] = arrays[1].astype(int)
        return Trajectory(*arrays, jumps=list(jumps))


class _Monitor:
    """Incremental stability classification of post-clearing samples."""

    def __init__(self, phi_s: float, phi_hi: float, phi_lo: float, settle_window: float,
                 omega_limit: float = OMEGA_LIMIT):
        self.phi_s, self.phi_hi, self.phi_lo = phi_s, phi_hi, phi_lo
        self.settle_window = settle_window
        self.omega_limit = omega_limit
        self.settled_since: float | None = None
        self.reason: Reason | None = None
        self.t: float = math.nan

    def update(self, t: float, phi: float, omega: float, settle_allowed: bool) -> bool:
        if self.reason is not None:
            return True
        if (phi > self.phi_hi and omega > 0) or (phi < self.phi_lo and omega < 0):
            self.reason, self.t = Reason.PHI_EXCEEDED, t
        elif abs(omega) > self.omega_limit:
            self.reason, self.t = Reason.OMEGA_DIVERGED, t
        elif settle_allowed and abs(phi - self.phi_s) < PHI_TOL and abs(omega) < OMEGA_TOL:
            if self.settled_since is None:
                self.settled_since = t
            if t - self.settled_since >= self.settle_window - 1e-12:
                self.reason, self.t = Reason.CONVERGED, t
        else:
            self.settled_since = None
        return self.reason is not None


def _guards(phi_u_a: float, phi_u_b: float) -> tuple[float, float]:
    hi = max(phi_u_a, phi_u_b)
    lo = min(phi_u_a, phi_u_b) - 2 * math.pi
    return hi + PHI_MARGIN, lo - PHI_MARGIN


def _march(cfg: IntegratorConfig, f, y, t0, t1, on_step):
    if cfg.method == "RK4":
        return march(f, y, t0, t1, cfg.step, on_step)
    return march_adaptive(f, y, t0, t1, cfg.step, cfg.rel_tol, cfg.abs_tol, on_step)


def simulate_gse(init: PllState, g: GseParams, horizon: float, cfg: IntegratorConfig = IntegratorConfig(),
                 stage: int = 2) -> Trajectory:
    """Integrate the frozen GSE from ``init``. Current and voltage columns are NaN."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rec = _Recorder()
    nan = math.nan
    rec.add(0.0, stage, init.phi, init.omega, nan, nan, nan)

    def f(y):
        return _gse_field(y[0], y[1], g.P_m, g.U_g, g.alpha, g.M)

    def on_step(t, y):
        rec.add(t, stage, y[0], y[1], nan, nan, nan)
        return False

    _march(cfg, f, (float(init.phi), float(init.omega)), 0.0, horizon, on_step)
    return rec.build([])


def simulate_gse_batch(phi0, omega0, g: GseParams, horizon: float, cfg: IntegratorConfig = IntegratorConfig()):
    """Many initial states of the frozen GSE at once.

    Returns ``(t, phi, omega)`` with one row per sample and one column per
    initial state. Each column equals the scalar :func:`simulate_gse` run.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    phi0 = np.array(phi0, dtype=float, ndmin=1)
    omega0 = np.array(omega0, dtype=float, ndmin=1)
    ts, phis, omegas = [0.0], [phi0], [omega0]

    def f(y):
        return _gse_field(y[0], y[1], g.P_m, g.U_g, g.alpha, g.M)

    def on_step(t, y):
        ts.append(t)
        phis.append(y[0])
        omegas.append(y[1])
        return False

    _march(cfg, f, (phi0, omega0), 0.0, horizon, on_step)
    return np.asarray(ts), np.vstack(phis), np.vstack(omegas)


def ramp_duration(scenario: Scenario, params: SystemParams) -> float:
    return abs(scenario.i_d1 - scenario.i_d2) / params.K_ramp


@dataclass(frozen=True)
class _Setup:
    phi_1: float
    omega_1: float
    i_q1: float
    i_q2: float
    eq3: Equilibria
    eq4: Equilibria
    g2: GseParams


def _setup(scenario: Scenario, params: SystemParams) -> _Setup:
    scenario.validate(params)
    eq1 = equilibria(scenario.i_d1, scenario.U_g1, params.X_g)
    phi_1 = eq1.phi_s
    i_q2 = scenario.i_q2 if scenario.i_q2 is not None else default_iq2(params, scenario, phi_1)
    return _Setup(
        phi_1=phi_1,
        omega_1=jump_fault_entry(scenario, params, phi_1),
        i_q1=prefault_reactive_current(params, scenario.i_d1, scenario.U_g1, phi_1),
        i_q2=i_q2,
        eq3=equilibria(scenario.i_d2, scenario.U_g1, params.X_g),
        eq4=eq1,
        g2=derive_gse(params, scenario.i_d2, scenario.U_g2),
    )


def _stage34_field(params: SystemParams, U_g: float, ramp: float, with_response: bool):
    X_g, kp, ki = params.X_g, params.k_ppll, params.k_ipll

    if not with_response:
        def f(y):
            return _driving_field(y[0], y[1], y[2], ramp, U_g, X_g, kp, ki)
        return f

    def f_full(y):
        dphi, domega, di_d = _driving_field(y[0], y[1], y[2], ramp, U_g, X_g, kp, ki)
        out = stage3_response_step(Stage3State(y[0], y[1], y[2], y[3]), params, U_g)
        return dphi, domega, di_d, out.dz_q
    return f_full


def simulate_scenario(scenario: Scenario, params: SystemParams, cfg: IntegratorConfig = IntegratorConfig(),
                      horizon: float | None = None, *, record: bool = True, stop_early: bool = False,
                      settle_window: float = SETTLE_WINDOW):
    """Run the four-stage sequence and classify the outcome.

    Returns ``(trajectory, verdict)``. With ``record=False`` only the verdict is
    computed (the TVC is skipped since it cannot influence ``phi`` or ``omega``)
    and the trajectory is ``None``; integration then stops at the verdict.
    """
    if scenario.t_clear is None:
        raise ValueError("scenario has no t_clear")
    s = _setup(scenario, params)
    t_f, t_c = scenario.t_fault, scenario.t_clear
    t_r = t_c + ramp_duration(scenario, params)
    if horizon is None:
        horizon = t_r + 3.0
    if horizon < t_c:
        raise ValueError("horizon ends before fault clearing")
    stop_early = stop_early or not record
    X_g, U_g1, U_g2 = params.X_g, scenario.U_g1, scenario.U_g2
    rec = _Recorder() if record else None
    jumps: list[JumpRecord] = []
    phi_hi, phi_lo = _guards(s.eq3.phi_u, s.eq4.phi_u)
    mon = _Monitor(s.eq4.phi_s, phi_hi, phi_lo, settle_window)

    # stage 1: equilibrium held
    U_t1 = float(terminal_voltage(s.phi_1, scenario.i_d1, s.i_q1, U_g1, X_g))
    if record:
        k = 0
        while k * cfg.step < t_f - 1e-9 * cfg.step:
            rec.add(k * cfg.step, 1, s.phi_1, 0.0, scenario.i_d1, s.i_q1, U_t1)
            k += 1
    before = (t_f, 1, s.phi_1, 0.0, scenario.i_d1, s.i_q1, U_t1)
    jumps.append(JumpRecord(t_f, 0.0, s.omega_1, 1, 2, before))

    # stage 2: during-fault GSE
    g2 = s.g2

    def f2(y):
        return _gse_field(y[0], y[1], g2.P_m, g2.U_g, g2.alpha, g2.M)

    def out2(phi):
        return terminal_voltage(phi, scenario.i_d2, s.i_q2, U_g2, X_g)

    if record:
        rec.add(t_f, 2, s.phi_1, s.omega_1, scenario.i_d2, s.i_q2, out2(s.phi_1))

        def on2(t, y):
            rec.add(t, 2, y[0], y[1], scenario.i_d2, s.i_q2, out2(y[0]))
            return False
    else:
        on2 = None
    _, (phi_c, omega_2), _ = _march(cfg, f2, (s.phi_1, s.omega_1), t_f, t_c, on2)
    phi_c, omega_2 = float(phi_c), float(omega_2)

    # clearing jump
    omega_3 = jump_fault_clear(params, U_g2, phi_c, omega_2, U_g1)
    before = rec.pop() if record else (t_c, 2, phi_c, omega_2, scenario.i_d2, s.i_q2, float(out2(phi_c)))
    jumps.append(JumpRecord(t_c, omega_2, omega_3, 2, 3, before))

    # stage 3: ramp with TVC restored; z_q chosen so that i_q is continuous
    U_t_c = float(terminal_voltage(phi_c, scenario.i_d2, s.i_q2, U_g1, X_g))
    z_q = s.i_q2 - params.K_pV * U_t_c
    direction = math.copysign(1.0, scenario.i_d1 - scenario.i_d2)
    y = (phi_c, omega_3, scenario.i_d2, z_q) if record else (phi_c, omega_3, scenario.i_d2)

    def make_on(stage, settle_allowed, U_g):
        def on(t, y):
            done = mon.update(t, float(y[0]), float(y[1]), settle_allowed)
            if record:
                out = stage3_response_step(Stage3State(*y), params, U_g)
                rec.add(t, stage, y[0], y[1], y[2], out.i_q, out.U_t)
            return done and stop_early
        return on

    if record:
        out = stage3_response_step(Stage3State(*y), params, U_g1)
        rec.add(t_c, 3, phi_c, omega_3, scenario.i_d2, out.i_q, out.U_t)
    mon.update(t_c, phi_c, omega_3, False)
    t, stopped = t_c, mon.reason is not None and stop_early
    if t_r > t_c and not stopped:
        f3 = _stage34_field(params, U_g1, direction * params.K_ramp, record)
        t_end = min(t_r, horizon)
        t, y, stopped = _march(cfg, f3, y, t_c, t_end, make_on(3, False, U_g1))
        y = tuple(float(c) for c in y)
    if not stopped and t_r <= horizon:
        # ramp complete: pin i_d and enter stage 4 (omega is continuous)
        if t_r > t_c:
            prev = rec.pop() if record else (t_r, 3, y[0], y[1], y[2], math.nan, math.nan)
        else:
            prev = (t_c, 3, phi_c, omega_3, scenario.i_d2, math.nan, math.nan)
        y = (y[0], y[1], scenario.i_d1) + y[3:]
        jumps.append(JumpRecord(t_r, y[1], y[1], 3, 4, prev))
        if record:
            out = stage3_response_step(Stage3State(*y), params, U_g1)
            if t_r > t_c:
                rec.add(t_r, 4, y[0], y[1], y[2], out.i_q, out.U_t)
            else:
                rec.pop()
                rec.add(t_c, 4, y[0], y[1], y[2], out.i_q, out.U_t)
        if mon.update(t_r, y[0], y[1], True) and stop_early:
            stopped = True
        if not stopped and horizon > t_r:
            f4 = _stage34_field(params, U_g1, 0.0, record)
            t, y, stopped = _march(cfg, f4, y, t_r, horizon, make_on(4, True, U_g1))
            y = tuple(float(c) for c in y)
        else:
            t = t_r

    final = PllState(float(y[0]), float(y[1]))
    reason = mon.reason or Reason.TIMEOUT
    verdict = StabilityVerdict(reason is Reason.CONVERGED, reason, final, mon.t if mon.reason else t)
    traj = rec.build(jumps) if record else None
    return traj, verdict


def classify_stability(traj_tail: Trajectory, eq: Equilibria, settle_window: float = SETTLE_WINDOW,
                       phi_u_guard: float | None = None, omega_limit: float = OMEGA_LIMIT) -> StabilityVerdict:
    """Classify recorded post-clearing samples (stages 3 and 4).

    ``eq`` is the stage-4 equilibrium pair; ``phi_u_guard`` (default ``eq.phi_u``)
    is the UEP that a slip has to pass by ``PHI_MARGIN``. Settling is only
    accepted in stage 4.
    """
    guard = eq.phi_u if phi_u_guard is None else phi_u_guard
    phi_hi, phi_lo = _guards(guard, eq.phi_u)
    mon = _Monitor(eq.phi_s, phi_hi, phi_lo, settle_window, omega_limit)
    mask = traj_tail.stage >= 3
    t, phi, omega, stage = traj_tail.t[mask], traj_tail.phi[mask], traj_tail.omega[mask], traj_tail.stage[mask]
    for k in range(len(t)):
        if mon.update(float(t[k]), float(phi[k]), float(omega[k]), bool(stage[k] == 4)):
            break
    if len(t):
        last = PllState(float(phi[-1]), float(omega[-1]))
        if mon.reason is not None:
            k = int(np.searchsorted(t, mon.t))
            last = PllState(float(phi[k]), float(omega[k]))
    else:
        last = PllState(math.nan, math.nan)
    reason = mon.reason or Reason.TIMEOUT
    return StabilityVerdict(reason is Reason.CONVERGED, reason, last, mon.t)


# -- vectorized classification ------------------------------------------------

def _batch_run(segments, y, t0, cfg: IntegratorConfig, phi_s, phi_hi, phi_lo, settle_window):
    """March many states at once with fixed-step RK4; returns reason codes (index into ``Reason``).

    ``segments`` is a list of ``(t_end, field, settle_allowed, on_enter)`` where
    ``on_enter(y)`` may rewrite the state when the segment starts. Finished
    states are dropped from the arrays as soon as they are classified.
    """
    n = len(y[0])
    codes = np.full(n, _REASONS.index(Reason.TIMEOUT))
    idx = np.arange(n)
    settled = np.full(n, np.nan)
    y = tuple(np.asarray(c, dtype=float) if np.ndim(c) else c for c in y)
    t = t0
    for t_end, f, settle_allowed, on_enter in segments:
        if on_enter is not None:
            y = on_enter(y)
        if t_end <= t:
            continue
        for t_next in _grid_times(t, t_end, cfg.step):
            y = rk4_step(f, y, t_next - t)
            t = t_next
            phi, omega = y[0], y[1]
            slip = ((phi > phi_hi) & (omega > 0)) | ((phi < phi_lo) & (omega < 0))
            blow = ~slip & (np.abs(omega) > OMEGA_LIMIT)
            done = slip | blow
            if settle_allowed:
                near = (np.abs(phi - phi_s) < PHI_TOL) & (np.abs(omega) < OMEGA_TOL)
                settled = np.where(near, np.where(np.isnan(settled), t, settled), np.nan)
                conv = near & (t - settled >= settle_window - 1e-12)
                codes[idx[conv]] = _REASONS.index(Reason.CONVERGED)
                done |= conv
            codes[idx[slip]] = _REASONS.index(Reason.PHI_EXCEEDED)
            codes[idx[blow]] = _REASONS.index(Reason.OMEGA_DIVERGED)
            if done.any():
                keep = ~done
                idx, settled = idx[keep], settled[keep]
                y = tuple(c[keep] if np.ndim(c) else c for c in y)
                if not len(idx):
                    return codes
    return codes


def verdict_from_stage3_entry(state: PllState, scenario: Scenario, params: SystemParams,
                              cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 20.0,
                              settle_window: float = SETTLE_WINDOW):
    """Stage-3/4 verdict for post-jump states at fault clearing (arrays allowed).

    Starts at ``t = 0`` of stage 3; the ramp and stage 4 follow as in
    :func:`simulate_scenario`. Returns stable flags (bool or bool array).
    """
    s = _setup(scenario, params)
    phi_hi, phi_lo = _guards(s.eq3.phi_u, s.eq4.phi_u)
    t_r = ramp_duration(scenario, params)
    direction = math.copysign(1.0, scenario.i_d1 - scenario.i_d2)
    U_g1 = scenario.U_g1
    scalar = np.ndim(state.phi) == 0
    phi = np.atleast_1d(np.asarray(state.phi, dtype=float))
    omega = np.broadcast_to(np.asarray(state.omega, dtype=float), phi.shape).copy()
    segments = [
        (min(t_r, horizon), _stage34_field(params, U_g1, direction * params.K_ramp, False), False, None),
        (horizon, _stage34_field(params, U_g1, 0.0, False), True,
         lambda y: (y[0], y[1], scenario.i_d1)),
    ]
    codes = _batch_run(segments, (phi.ravel(), omega.ravel(), scenario.i_d2), 0.0, cfg,
                       s.eq4.phi_s, phi_hi, phi_lo, settle_window)
    stable = (codes == _REASONS.index(Reason.CONVERGED)).reshape(phi.shape)
    return bool(stable[0]) if scalar else stable


def _frozen_basin(phi, omega, g: GseParams, eq: Equilibria, cfg: IntegratorConfig, horizon: float,
                  settle_window: float):
    phi_hi, phi_lo = _guards(eq.phi_u, eq.phi_u)

    def f(y):
        return _gse_field(y[0], y[1], g.P_m, g.U_g, g.alpha, g.M)

    return _batch_run([(horizon, f, True, None)], (phi, omega), 0.0, cfg,
                      eq.phi_s, phi_hi, phi_lo, settle_window)


@dataclass(frozen=True)
class BasinMap:
    phi_range: tuple[float, float]
    omega_range: tuple[float, float]
    resolution: tuple[int, int]
    grid: np.ndarray  # shape (n_phi, n_omega); True inside the basin
    i_d: float
    U_g: float
    timeouts: int = 0

    @property
    def phi_centers(self) -> np.ndarray:
        lo, hi = self.phi_range
        n = self.resolution[0]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n

    @property
    def omega_centers(self) -> np.ndarray:
        lo, hi = self.omega_range
        n = self.resolution[1]
        return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def basin_map(i_d: float, U_g: float, params: SystemParams, phi_range=(-1.0, 4.0), omega_range=(-100.0, 100.0),
              resolution=(50, 50), cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 20.0,
              settle_window: float = SETTLE_WINDOW) -> BasinMap:
    """Basin of attraction of the frozen GSE ``(i_d, U_g)`` sampled at cell centers.

    Cells that neither settle nor slip within ``horizon`` count as outside and
    are tallied in ``timeouts``.
    """
    n_phi, n_omega = resolution
    if n_phi < 1 or n_omega < 1:
        raise ValueError("resolution must be positive")
    empty = BasinMap(tuple(phi_range), tuple(omega_range), (n_phi, n_omega),
                     np.zeros((n_phi, n_omega), dtype=bool), i_d, U_g)
    P, W = np.meshgrid(empty.phi_centers, empty.omega_centers, indexing="ij")
    codes = basin_cells(P.ravel(), W.ravel(), i_d, U_g, params, cfg, horizon, settle_window)
    return basin_from_codes(empty, codes)


def basin_cells(phi, omega, i_d: float, U_g: float, params: SystemParams,
                cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 20.0,
                settle_window: float = SETTLE_WINDOW) -> np.ndarray:
    """Reason codes (indices into ``Reason``) for explicit cell states of the frozen GSE.

    Cells are independent, so any partition of the grid gives identical codes.
    """
    eq = equilibria(i_d, U_g, params.X_g)
    g = derive_gse(params, i_d, U_g)
    return _frozen_basin(np.asarray(phi, dtype=float), np.asarray(omega, dtype=float), g, eq, cfg,
                         horizon, settle_window)


def basin_from_codes(template: BasinMap, codes: np.ndarray) -> BasinMap:
    n_phi, n_omega = template.resolution
    grid = (codes == _REASONS.index(Reason.CONVERGED)).reshape(n_phi, n_omega)
    timeouts = int(np.sum(codes == _REASONS.index(Reason.TIMEOUT)))
    return replace(template, grid=grid, timeouts=timeouts)


def fate_at_stage3_entry(state: PllState, scenario: Scenario, params: SystemParams,
                         cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 20.0,
                         settle_window: float = SETTLE_WINDOW):
    """Whether ``state`` lies in the basin of the frozen GSE ``(i_d2, U_g1)``.

    This is the shortcut that ignores the ramp. Arrays are accepted.
    """
    eq = equilibria(scenario.i_d2, scenario.U_g1, params.X_g)
    g = derive_gse(params, scenario.i_d2, scenario.U_g1)
    scalar = np.ndim(state.phi) == 0
    phi = np.atleast_1d(np.asarray(state.phi, dtype=float))
    omega = np.broadcast_to(np.asarray(state.omega, dtype=float), phi.shape).copy()
    codes = _frozen_basin(phi.ravel(), omega.ravel(), g, eq, cfg, horizon, settle_window)
    inside = (codes == _REASONS.index(Reason.CONVERGED)).reshape(phi.shape)
    return bool(inside[0]) if scalar else inside


# -- clearing-time oracle -----------------------------------------------------

class NoBracket(RuntimeError):
    def __init__(self, always_stable: bool, message: str):
        super().__init__(message)
        self.always_stable = always_stable


class NonMonotoneStability(RuntimeError):
    """Probes found an unstable clearing duration shorter than a stable one."""


@dataclass(frozen=True)
class OracleResult:
    t_cr: float
    phi_cr: float
    probes: tuple = ()


def fault_state_at(scenario: Scenario, params: SystemParams, duration: float,
                   cfg: IntegratorConfig = IntegratorConfig()) -> PllState:
    """State on the during-fault GSE trajectory ``duration`` seconds after inception."""
    s = _setup(scenario, params)
    g = s.g2
    if duration <= 0:
        return PllState(s.phi_1, s.omega_1)

    def f(y):
        return _gse_field(y[0], y[1], g.P_m, g.U_g, g.alpha, g.M)

    t_f = scenario.t_fault
    _, y, _ = _march(cfg, f, (s.phi_1, s.omega_1), t_f, t_f + duration, None)
    return PllState(float(y[0]), float(y[1]))


def oracle_cct(scenario: Scenario, params: SystemParams, cfg: IntegratorConfig = IntegratorConfig(),
               tol: float = 5e-4, max_duration: float = 5.0, first_probe: float = 0.05,
               settle_window: float = SETTLE_WINDOW) -> OracleResult:
    """Critical clearing time by bisection over full simulations.

    ``t_cr`` is the longest fault duration found stable; the bracket is
    narrower than ``tol``. ``phi_cr`` is the during-fault angle at that duration.
    """
    base = scenario.replace(t_clear=None)
    probes: list[tuple[float, bool]] = []
    t_extra = ramp_duration(scenario, params) + 3.0

    def stable(duration: float) -> bool:
        sc = base.with_clearing(duration)
        horizon = sc.t_clear + t_extra
        for _ in range(3):
            _, v = simulate_scenario(sc, params, cfg, horizon, record=False, settle_window=settle_window)
            if v.reason is not Reason.TIMEOUT:
                break
            horizon = sc.t_clear + 4 * (horizon - sc.t_clear)
        else:
            log.warning("clearing after %.6g s did not settle; counted unstable", duration)
        probes.append((duration, v.stable))
        return v.stable

    shortest = cfg.step
    if not stable(shortest):
        raise NoBracket(False, "no-bracket: always unstable")
    lo, hi = shortest, None
    d = max(first_probe, shortest * 2)
    while d < max_duration:
        if stable(d):
            lo, d = d, 2 * d
        else:
            hi = d
            break
    if hi is None:
        if stable(max_duration):
            raise NoBracket(True, "no-bracket: always stable")
        hi = max_duration
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    longest_stable = max(d for d, ok in probes if ok)
    shortest_unstable = min(d for d, ok in probes if not ok)
    if shortest_unstable < longest_stable:
        raise NonMonotoneStability(
            f"unstable at {shortest_unstable:.6g} s but stable at {longest_stable:.6g} s; probes={probes}"
        )
    phi_cr = fault_state_at(base, params, lo, cfg).phi
    return OracleResult(t_cr=lo, phi_cr=phi_cr, probes=tuple(probes))


# -- farm aggregation ---------------------------------------------------------

@dataclass(frozen=True)
class FarmSpec:
    n: int
    device: SystemParams
    X_line: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a farm needs at least one machine")


def aggregate_farm(spec: FarmSpec) -> SystemParams:
    """Identical machines in parallel behind a shared line, on the aggregate base.

    Controller gains carry over; the shared line impedance scales with ``n``.
    """
    return spec.device.replace(X_g=spec.device.X_g + spec.n * spec.X_line)
