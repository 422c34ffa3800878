"""Basins of attraction after clearing, for two active currents.

A lower active current during recovery leaves a wider basin, which is why the
fate of the converter can be read off at the instant of clearing. The script
writes ``basin.svg`` with the i_d = 0.4 basin, the i_d = 0.8 outline and the
post-clearing trajectory of a recoverable fault.

    python demos/basin_figure.py [output-dir]
"""
import sys
from pathlib import Path

from gse_lvrt import REFERENCE_PARAMS, reference_scenario, simulate_scenario
from gse_lvrt.cli import compute_basin
from gse_lvrt.integrate import IntegratorConfig
from gse_lvrt.plots import plot_basin

WINDOW_PHI = (-1.0, 4.0)
WINDOW_OMEGA = (-100.0, 100.0)
RESOLUTION = (120, 120)


def main(out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = IntegratorConfig()
    p = REFERENCE_PARAMS
    low = compute_basin(0.4, 1.0, p, cfg, WINDOW_PHI, WINDOW_OMEGA, RESOLUTION, threads=4)
    high = compute_basin(0.8, 1.0, p, cfg, WINDOW_PHI, WINDOW_OMEGA, RESOLUTION, threads=4)
    print(f"inside fraction: i_d=0.4 {low.grid.mean():.3f}, i_d=0.8 {high.grid.mean():.3f}")

    traj, verdict = simulate_scenario(reference_scenario(0.2, 0.4, t_clear=0.25), p, cfg, horizon=1.5)
    print(f"fault cleared after 0.15 s: {verdict.reason.value}")
    path = out_dir / "basin.svg"
    plot_basin(low, path, p.X_g, overlay=high, trajectory=traj.segment((3, 4)))
    print(f"wrote {path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_output"))
