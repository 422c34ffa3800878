"""Command-line front end.

Subcommands: ``simulate``, ``analyze``, ``sweep``, ``basin`` and ``farm``.
Exit codes: 0 success (or partial success), 2 configuration error,
3 runtime error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .eac import analyze, eac_inputs
from .model import Scenario, SystemParams, default_iq2, equilibria
from .report import RunReport, table_row, write_basin_csv, write_table_csv, write_trajectory_csv
from .sim import BasinMap, FarmSpec, aggregate_farm, basin_cells, basin_from_codes, simulate_scenario

log = logging.getLogger("gse_lvrt")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
MAX_RESOLUTION = 2000


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required")
    return load_config(args.config)


def resolved_iq2(scenario: Scenario, params: SystemParams) -> float:
    if scenario.i_q2 is not None:
        return scenario.i_q2
    phi_1 = equilibria(scenario.i_d1, scenario.U_g1, params.X_g).phi_s
    return default_iq2(params, scenario, phi_1)


def _map(fn, items, threads: int):
    """Ordered map, in worker processes when ``threads > 1``."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    rc = _config(args)
    if rc.scenario.t_clear is None:
        raise ConfigError("simulate needs [lvrt] t_clear")
    traj, verdict = simulate_scenario(rc.scenario, rc.params, rc.integrator, rc.horizon)
    _emit(write_trajectory_csv(traj), args.out)
    if args.plot:
        from .plots import plot_trajectory
        plot_trajectory(traj, args.plot, rc.params.omega_0 if args.hz else None)
    log.info("verdict: %s at t=%.6g s", verdict.reason.value, verdict.t)
    return EXIT_OK


# -- analyze ------------------------------------------------------------------

def run_analysis(scenario: Scenario, params: SystemParams, rc: RunConfig, oracle: bool,
                 constant_alpha: bool = False, farm: dict | None = None) -> RunReport:
    cca, cct = analyze(scenario, params, rc.integrator, with_oracle=oracle, constant_alpha=constant_alpha)
    extra = {"constant_alpha": True} if constant_alpha else {}
    return RunReport(scenario, params, rc.integrator, resolved_iq2(scenario, params), cca, cct,
                     farm=farm, extra=extra)


def _succeeded(report: RunReport) -> bool:
    return any(v is not None for v in report.cca.values())


def cmd_analyze(args) -> int:
    rc = _config(args)
    report = run_analysis(rc.scenario, rc.params, rc, args.oracle, args.constant_alpha)
    _emit(report.to_json() + "\n", args.out)
    if args.plot and report.cca.phi_cr_3 is not None:
        from .plots import plot_eac_areas
        plot_eac_areas(eac_inputs(rc.scenario, rc.params, args.constant_alpha), report.cca.phi_cr_3, args.plot,
                       "phi_cr_3")
    return EXIT_OK if _succeeded(report) else EXIT_RUNTIME


# -- sweep --------------------------------------------------------------------

def _sweep_cell(job):
    scenario, params, rc, oracle, constant_alpha = job
    try:
        report = run_analysis(scenario, params, rc, oracle, constant_alpha)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        return table_row(scenario.U_g2, scenario.i_d2, None, None, f"{type(exc).__name__}: {exc}"), False
    return table_row(scenario.U_g2, scenario.i_d2, report.cca, report.cct), _succeeded(report)


def sweep_rows(rc: RunConfig, params: SystemParams, oracle: bool = True, threads: int = 1,
               constant_alpha: bool = False):
    jobs = [(sc, params, rc, oracle, constant_alpha) for sc in rc.sweep_scenarios()]
    return _map(_sweep_cell, jobs, threads)


def cmd_sweep(args) -> int:
    rc = _config(args)
    results = sweep_rows(rc, rc.params, not args.no_oracle, args.threads, args.constant_alpha)
    _emit(write_table_csv([r for r, _ in results]), args.out)
    return EXIT_OK if any(ok for _, ok in results) else EXIT_RUNTIME


# -- basin --------------------------------------------------------------------

def _basin_chunk(job):
    phi, omega, i_d, U_g, params, cfg, horizon = job
    return basin_cells(phi, omega, i_d, U_g, params, cfg, horizon)


def compute_basin(i_d: float, U_g: float, params: SystemParams, cfg, phi_range, omega_range, resolution,
                  threads: int = 1, horizon: float = 20.0) -> BasinMap:
    n_phi, n_omega = resolution
    template = BasinMap(tuple(phi_range), tuple(omega_range), (n_phi, n_omega),
                        np.zeros((n_phi, n_omega), dtype=bool), i_d, U_g)
    P, W = np.meshgrid(template.phi_centers, template.omega_centers, indexing="ij")
    rows = np.array_split(np.arange(n_phi), max(1, min(threads, n_phi)))
    jobs = [(P[r].ravel(), W[r].ravel(), i_d, U_g, params, cfg, horizon) for r in rows if len(r)]
    codes = np.concatenate(_map(_basin_chunk, jobs, threads))
    return basin_from_codes(template, codes)


def cmd_basin(args) -> int:
    rc = _config(args)
    n_phi, n_omega = args.resolution
    if not (1 <= n_phi <= MAX_RESOLUTION and 1 <= n_omega <= MAX_RESOLUTION):
        raise ConfigError(f"resolution must lie within 1..{MAX_RESOLUTION} per axis")
    if args.phi_range[0] >= args.phi_range[1] or args.omega_range[0] >= args.omega_range[1]:
        raise ConfigError("window ranges must be increasing")
    i_d = rc.scenario.i_d2 if args.i_d is None else args.i_d
    U_g = rc.scenario.U_g1 if args.U_g is None else args.U_g
    equilibria(i_d, U_g, rc.params.X_g)
    bm = compute_basin(i_d, U_g, rc.params, rc.integrator, args.phi_range, args.omega_range,
                       (n_phi, n_omega), args.threads)
    if bm.timeouts:
        log.warning("%d cells neither settled nor slipped; counted outside", bm.timeouts)
    _emit(write_basin_csv(bm), args.out)
    svg = args.svg
    if svg is None and args.out not in (None, "-"):
        svg = str(Path(args.out).with_suffix(".svg"))
    if svg:
        from .plots import plot_basin
        overlay = None
        if args.overlay_i_d is not None:
            overlay = compute_basin(args.overlay_i_d, U_g, rc.params, rc.integrator, args.phi_range,
                                    args.omega_range, (n_phi, n_omega), args.threads)
        traj = None
        if args.trajectory:
            if rc.scenario.t_clear is None:
                raise ConfigError("--trajectory needs [lvrt] t_clear")
            traj, _ = simulate_scenario(rc.scenario, rc.params, rc.integrator, rc.horizon)
            traj = traj.segment((2, 3, 4))
        plot_basin(bm, svg, rc.params.X_g, overlay, traj)
    return EXIT_OK


# -- farm ---------------------------------------------------------------------

def cmd_farm(args) -> int:
    rc = _config(args)
    if rc.farm is None:
        raise ConfigError("farm needs a [farm] section with X_line")
    n = rc.farm.n if args.n is None else args.n
    if n < 1:
        raise ConfigError("--n must be at least 1")
    params = aggregate_farm(FarmSpec(n, rc.params, rc.farm.X_line))
    farm = {"n": n, "X_line": rc.farm.X_line, "X_device": rc.params.X_g, "X_g_equivalent": params.X_g}
    if args.sweep:
        results = sweep_rows(rc, params, True, args.threads)
        _emit(write_table_csv([r for r, _ in results]), args.out)
        return EXIT_OK if any(ok for _, ok in results) else EXIT_RUNTIME
    try:
        rc.scenario.validate(params)
    except ValueError as exc:
        raise ConfigError(f"aggregated farm: {exc}") from None
    report = run_analysis(rc.scenario, params, rc, args.oracle, farm=farm)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK if _succeeded(report) else EXIT_RUNTIME


# -- entry point --------------------------------------------------------------

def _global_options(parser: argparse.ArgumentParser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="scenario configuration file")
    parser.add_argument("--out", metavar="PATH", default=default, help="output file (default: stdout)")
    parser.add_argument("--threads", type=int, metavar="N", default=argparse.SUPPRESS if suppress else 1,
                        help="worker processes for sweep and basin")
    parser.add_argument("--seedless", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="assert that no random numbers are used (always true)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gse-lvrt", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="four-stage time series as CSV")
    _global_options(p, suppress=True)
    p.add_argument("--plot", metavar="SVG", help="also write a time-series figure")
    p.add_argument("--hz", action="store_true", help="plot the frequency deviation in Hz")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="three CCA/CCT approximations as JSON")
    _global_options(p, suppress=True)
    p.add_argument("--oracle", action="store_true", help="also bisect the clearing time by simulation")
    p.add_argument("--constant-alpha", action="store_true",
                   help="use the during-fault damping on both orbit segments")
    p.add_argument("--plot", metavar="SVG", help="also write the equal-area diagram at phi_cr_3")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="comparison table over the [sweep] pairs as CSV")
    _global_options(p, suppress=True)
    p.add_argument("--no-oracle", action="store_true", help="skip the simulation oracle")
    p.add_argument("--constant-alpha", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("basin", help="basin of attraction of the frozen swing equation")
    _global_options(p, suppress=True)
    p.add_argument("--i-d", type=float, dest="i_d", help="active current (default: [lvrt] i_d2)")
    p.add_argument("--U-g", type=float, dest="U_g", help="bus voltage (default: [grid] U_g1)")
    p.add_argument("--phi-range", type=float, nargs=2, default=(-1.0, 4.0), metavar=("LO", "HI"))
    p.add_argument("--omega-range", type=float, nargs=2, default=(-100.0, 100.0), metavar=("LO", "HI"))
    p.add_argument("--resolution", type=int, nargs=2, default=(50, 50), metavar=("N_PHI", "N_OMEGA"))
    p.add_argument("--svg", metavar="PATH", help="figure path (default: --out with .svg)")
    p.add_argument("--overlay-i-d", type=float, dest="overlay_i_d", help="outline a second basin")
    p.add_argument("--trajectory", action="store_true", help="overlay the scenario trajectory")
    p.set_defaults(func=cmd_basin)

    p = sub.add_parser("farm", help="analyze an aggregated farm of identical machines")
    _global_options(p, suppress=True)
    p.add_argument("--n", type=int, help="number of machines (default: [farm] n)")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--sweep", action="store_true", help="run the [sweep] table on the aggregate")
    p.set_defaults(func=cmd_farm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
