import math

import numpy as np
import pytest

from gse_lvrt.eac import eac_inputs, energy_constants, post_orbit_speed
from gse_lvrt.integrate import IntegratorConfig
from gse_lvrt.model import (
    REFERENCE_PARAMS,
    GseParams,
    PllState,
    Scenario,
    SystemParams,
    derive_gse,
    equilibria,
    jump_fault_clear,
    jump_fault_entry,
    reference_scenario,
)
from gse_lvrt.sim import (
    FarmSpec,
    NoBracket,
    Reason,
    StabilityVerdict,
    Trajectory,
    aggregate_farm,
    basin_map,
    classify_stability,
    fate_at_stage3_entry,
    fault_state_at,
    oracle_cct,
    ramp_duration,
    simulate_gse,
    simulate_gse_batch,
    simulate_scenario,
    verdict_from_stage3_entry,
)

P = REFERENCE_PARAMS

# regression fixture: reference parameters, U_g2 = 0.2, i_d2 = 0.4
ORACLE_T_CR = 0.18281250000000002
ORACLE_PHI_CR = 2.7396462109697977


def energy(traj, g: GseParams):
    return 0.5 * g.M * traj.omega ** 2 - g.P_m * traj.phi - g.U_g * np.cos(traj.phi)


def test_gse_equilibrium_is_constant():
    g = derive_gse(P, 0.4, 1.0)
    phi_s = equilibria(0.4, 1.0, P.X_g).phi_s
    traj = simulate_gse(PllState(phi_s, 0.0), g, 0.5)
    assert np.all(traj.phi == phi_s)
    assert np.max(np.abs(traj.omega)) < 1e-12


def test_undamped_energy_drift():
    g = derive_gse(P, 0.4, 1.0)
    g = GseParams(g.M, g.P_m, g.U_g, 0.0)
    traj = simulate_gse(PllState(1.0, 20.0), g, 10.0)
    E = energy(traj, g)
    assert np.max(np.abs(E - E[0])) < 1e-8


def test_batch_columns_match_scalar_runs():
    g = derive_gse(P, 0.4, 1.0)
    t, phi, omega = simulate_gse_batch([1.0, 0.3], [20.0, -5.0], g, 0.05)
    for k, (p0, w0) in enumerate([(1.0, 20.0), (0.3, -5.0)]):
        one = simulate_gse(PllState(p0, w0), g, 0.05)
        assert np.array_equal(one.t, t)
        assert np.array_equal(one.phi, phi[:, k]) and np.array_equal(one.omega, omega[:, k])


def test_orbit_on_critical_energy_curve_keeps_its_energy():
    sc = reference_scenario(0.2, 0.4)
    inp = eac_inputs(sc, P)
    _, h_3 = energy_constants(inp, 0.0)
    g = derive_gse(P, sc.i_d2, 1.0)
    g = GseParams(g.M, g.P_m, g.U_g, 0.0)
    w = post_orbit_speed(inp, h_3, 2.0)
    traj = simulate_gse(PllState(2.0, w), g, 0.05)
    assert np.max(np.abs(energy(traj, g) - h_3)) < 1e-9


def test_damped_envelope_decays():
    g = derive_gse(P, 0.4, 1.0)
    phi_s = equilibria(0.4, 1.0, P.X_g).phi_s
    traj = simulate_gse(PllState(phi_s + 0.1, 0.0), g, 1.0)
    w = traj.omega
    # peaks of |omega| between successive zero crossings
    sign = np.signbit(w[1:])
    cross = np.flatnonzero(sign[1:] != sign[:-1]) + 1
    peaks = [np.max(np.abs(w[a:b])) for a, b in zip(cross[:-1], cross[1:])]
    assert len(peaks) >= 3
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_reference_trajectory_shape():
    sc = reference_scenario(0.2, 0.4, t_clear=0.25)
    traj, verdict = simulate_scenario(sc, P, horizon=1.0)
    assert np.all(np.diff(traj.t) > 0)
    assert np.all(np.diff(traj.stage) >= 0)
    assert set(np.unique(traj.stage)) == {1, 2, 3, 4}
    stage2 = traj.segment([2])
    assert np.all(np.diff(stage2.phi) > 0)
    clear = [j for j in traj.jumps if j.to_stage == 3][0]
    assert clear.omega_after < clear.omega_before
    # every stage transition carries a jump record
    assert [(j.from_stage, j.to_stage) for j in traj.jumps] == [(1, 2), (2, 3), (3, 4)]
    assert verdict.stable and verdict.reason is Reason.CONVERGED


def test_ramp_pins_current_and_respects_bounds():
    sc = reference_scenario(0.2, 0.4, t_clear=0.2)
    traj, _ = simulate_scenario(sc, P, horizon=0.8)
    s3 = traj.segment([3])
    assert np.all((s3.i_d >= 0.4 - 1e-12) & (s3.i_d <= 1.0 + 1e-12))
    assert np.all(traj.segment([4]).i_d == 1.0)
    t_r = sc.t_clear + ramp_duration(sc, P)
    assert traj.jumps[-1].t == pytest.approx(t_r, abs=1e-12)
    assert np.all(np.hypot(traj.i_d, traj.i_q) <= P.I_max + 1e-9)


def test_recorded_jumps_match_jump_maps():
    sc = reference_scenario(0.1, 0.25, t_clear=0.2)
    traj, _ = simulate_scenario(sc, P, horizon=0.6)
    entry, clear, ramp_end = traj.jumps
    phi_1 = equilibria(sc.i_d1, sc.U_g1, P.X_g).phi_s
    assert entry.omega_before == 0.0
    assert entry.omega_after == jump_fault_entry(sc, P, phi_1)
    phi_c = clear.before[2]
    assert clear.omega_after == jump_fault_clear(P, sc.U_g2, phi_c, clear.omega_before, sc.U_g1)
    assert ramp_end.omega_after == ramp_end.omega_before


def test_deterministic():
    sc = reference_scenario(0.2, 0.5, t_clear=0.2)
    a, va = simulate_scenario(sc, P, horizon=0.5)
    b, vb = simulate_scenario(sc, P, horizon=0.5)
    for c in Trajectory.COLUMNS:
        assert np.array_equal(getattr(a, c), getattr(b, c), equal_nan=True)
    assert va == vb


def test_vanishing_fault_without_proportional_gain_is_stable():
    # no jumps and no current ramp: a 1 us dip leaves the undamped loop at rest
    p = P.replace(k_ppll=0.0)
    sc = Scenario(U_g2=0.2, i_d2=1.0, i_d1=1.0).with_clearing(1e-6)
    _, v = simulate_scenario(sc, p, horizon=1.0, record=False)
    assert v.stable


def test_fault_past_oracle_is_unstable_by_angle():
    sc = reference_scenario(0.2, 0.4).with_clearing(ORACLE_T_CR + 0.01)
    _, v = simulate_scenario(sc, P, record=False)
    assert not v.stable
    assert v.reason is Reason.PHI_EXCEEDED


def test_verdict_only_matches_recorded_run():
    for d in (0.1, 0.2):
        sc = reference_scenario(0.2, 0.4).with_clearing(d)
        _, v_rec = simulate_scenario(sc, P, stop_early=True)
        _, v_fast = simulate_scenario(sc, P, record=False)
        assert v_rec.reason is v_fast.reason
        assert v_rec.t == v_fast.t
        assert v_rec.final_state == v_fast.final_state


def test_adaptive_method_agrees():
    sc = reference_scenario(0.2, 0.4, t_clear=0.2)
    _, v4 = simulate_scenario(sc, P, record=False)
    _, v45 = simulate_scenario(sc, P, IntegratorConfig(method="RK45"), record=False)
    assert v4.reason is v45.reason


def test_batch_verdict_from_clearing_state_matches_full_run():
    for d in (0.15, 0.2):
        sc = reference_scenario(0.2, 0.4).with_clearing(d)
        _, v = simulate_scenario(sc, P, record=False)
        s = fault_state_at(sc, P, d)
        omega_3 = jump_fault_clear(P, sc.U_g2, s.phi, s.omega, sc.U_g1)
        assert verdict_from_stage3_entry(PllState(s.phi, omega_3), sc, P) is v.stable


def _traj(t, phi, omega, stage=4):
    n = len(t)
    return Trajectory(np.asarray(t), np.full(n, stage), np.asarray(phi), np.asarray(omega),
                      np.zeros(n), np.zeros(n), np.zeros(n))


def test_classify_constant_at_sep():
    eq = equilibria(1.0, 1.0, P.X_g)
    t = np.arange(0, 0.5, 1e-3)
    v = classify_stability(_traj(t, np.full_like(t, eq.phi_s), np.zeros_like(t)), eq)
    assert v.stable and v.reason is Reason.CONVERGED


def test_classify_runaway_angle():
    eq = equilibria(1.0, 1.0, P.X_g)
    t = np.arange(0, 0.5, 1e-3)
    v = classify_stability(_traj(t, 2.0 + 10 * t, np.full_like(t, 10.0)), eq)
    assert not v.stable and v.reason is Reason.PHI_EXCEEDED


def test_classify_closed_orbit_times_out():
    eq = equilibria(1.0, 1.0, P.X_g)
    t = np.arange(0, 2.0, 1e-3)
    v = classify_stability(_traj(t, eq.phi_s + 0.3 * np.sin(20 * t), 6 * np.cos(20 * t)), eq)
    assert not v.stable and v.reason is Reason.TIMEOUT


def test_classify_frequency_blowup():
    eq = equilibria(1.0, 1.0, P.X_g)
    t = np.arange(0, 0.1, 1e-3)
    v = classify_stability(_traj(t, np.full_like(t, 1.0), np.full_like(t, 900.0)), eq)
    assert v.reason is Reason.OMEGA_DIVERGED


def test_classify_settling_only_counts_in_stage_4():
    eq = equilibria(1.0, 1.0, P.X_g)
    t = np.arange(0, 0.5, 1e-3)
    v = classify_stability(_traj(t, np.full_like(t, eq.phi_s), np.zeros_like(t), stage=3), eq)
    assert v.reason is Reason.TIMEOUT


def test_verdict_invariant():
    with pytest.raises(ValueError):
        StabilityVerdict(True, Reason.TIMEOUT, PllState(0.0, 0.0), 1.0)


def test_oracle_regression_fixture():
    res = oracle_cct(reference_scenario(0.2, 0.4), P)
    assert res.t_cr == pytest.approx(ORACLE_T_CR, abs=1e-12)
    assert res.phi_cr == pytest.approx(ORACLE_PHI_CR, abs=1e-9)
    stable = [d for d, ok in res.probes if ok]
    unstable = [d for d, ok in res.probes if not ok]
    assert max(stable) == res.t_cr
    assert min(unstable) - res.t_cr < 5e-4


def test_oracle_always_stable():
    sc = Scenario(U_g2=0.99, i_d2=1.0, i_d1=1.0)
    with pytest.raises(NoBracket) as info:
        oracle_cct(sc, P)
    assert info.value.always_stable


def test_basin_contains_sep_and_excludes_beyond_saddle():
    bm = basin_map(0.4, 1.0, P, phi_range=(-1, 4), omega_range=(-100, 100), resolution=(2, 2))
    assert bm.grid.shape == (2, 2)
    eq = equilibria(0.4, 1.0, P.X_g)
    inside = fate_at_stage3_entry(PllState(np.array([eq.phi_s, eq.phi_u + 0.1]), np.array([0.0, 1.0])),
                                  reference_scenario(0.2, 0.4), P)
    assert inside.tolist() == [True, False]


def test_basin_sep_cell_inside():
    bm = basin_map(0.8, 1.0, P, resolution=(25, 25))
    eq = equilibria(0.8, 1.0, P.X_g)
    a = int(np.argmin(np.abs(bm.phi_centers - eq.phi_s)))
    b = int(np.argmin(np.abs(bm.omega_centers)))
    assert bm.grid[a, b]
    assert bm.grid.any() and not bm.grid.all()


def test_basin_moves_lower_left_as_current_grows():
    kw = dict(phi_range=(1.5, 3.5), omega_range=(-40, 40), resolution=(40, 40))
    low, high = basin_map(0.4, 1.0, P, **kw), basin_map(0.8, 1.0, P, **kw)
    # near the saddle the low-current basin strictly contains the high-current one
    assert np.all(low.grid >= high.grid)
    assert np.any(low.grid & ~high.grid)


def test_fate_examples():
    sc = reference_scenario(0.2, 0.4)
    eq = equilibria(sc.i_d2, 1.0, P.X_g)
    assert fate_at_stage3_entry(PllState(eq.phi_s, 0.0), sc, P) is True
    assert fate_at_stage3_entry(PllState(eq.phi_u + 0.2, 0.5), sc, P) is False


def test_farm_aggregation():
    dev = SystemParams(X_g=0.1)
    assert aggregate_farm(FarmSpec(10, dev, 0.05)).X_g == pytest.approx(0.6)
    one = aggregate_farm(FarmSpec(1, dev, 0.05))
    assert one == dev.replace(X_g=0.1 + 0.05)
    assert aggregate_farm(FarmSpec(20, dev, 0.05)).X_g > aggregate_farm(FarmSpec(10, dev, 0.05)).X_g
    with pytest.raises(ValueError):
        FarmSpec(0, dev, 0.05)


def test_farm_larger_fleet_raises_prefault_angle():
    dev = REFERENCE_PARAMS.replace(X_g=0.1)
    phis = [equilibria(0.5, 1.0, aggregate_farm(FarmSpec(n, dev, 0.05)).X_g).phi_s for n in (5, 10, 20)]
    assert phis == sorted(phis) and len(set(phis)) == 3


def test_simulate_requires_clearing_time():
    with pytest.raises(ValueError):
        simulate_scenario(reference_scenario(0.2, 0.4), P)


def test_fault_state_tracks_monotone_rise():
    sc = reference_scenario(0.2, 0.4)
    phis = [fault_state_at(sc, P, d).phi for d in (0.0, 0.05, 0.1, 0.15)]
    assert phis == sorted(phis)
    assert phis[0] == equilibria(1.0, 1.0, P.X_g).phi_s
    assert math.isfinite(phis[-1])
