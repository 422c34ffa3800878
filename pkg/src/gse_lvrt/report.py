"""JSON run reports and CSV export."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .eac import CcaReport, CctReport
from .integrate import IntegratorConfig
from .model import Scenario, SystemParams
from .sim import BasinMap, Trajectory

__all__ = ["SCHEMA_VERSION", "RunReport", "write_trajectory_csv", "write_table_csv",
           "write_basin_csv", "format_float"]

SCHEMA_VERSION = 1
TOOL_NAME = "gse-lvrt"


def format_float(x) -> str:
    return "%.17g" % x


@dataclass
class RunReport:
    scenario: Scenario
    params: SystemParams
    integrator: IntegratorConfig
    i_q2: float
    cca: CcaReport
    cct: CctReport
    farm: dict | None = None
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cca, cct = self.cca, self.cct
        if cct.oracle_t_cr is not None:
            oracle = cct.oracle_t_cr
        else:
            oracle = cct.oracle_status
        return {
            "schema_version": self.schema_version,
            "tool": {"name": TOOL_NAME, "version": self.tool_version},
            "scenario": asdict(self.scenario),
            "i_q2": self.i_q2,
            "i_q2_source": "auto" if self.scenario.i_q2 is None else "config",
            "params": asdict(self.params),
            "integrator": asdict(self.integrator),
            "farm": self.farm,
            "cca": {
                "phi_cr_1": cca.phi_cr_1, "phi_cr_2": cca.phi_cr_2, "phi_cr_3": cca.phi_cr_3,
                "h_2": cca.h_2, "h_3": cca.h_3, "S_d": cca.S_d,
                "oracle": cca.oracle_phi_cr,
                "errors": {f"phi_cr_{k}": getattr(cca, f"err_{k}") for k in (1, 2, 3)},
            },
            "cct": {
                "t_cr_1": cct.t_cr_1, "t_cr_2": cct.t_cr_2, "t_cr_3": cct.t_cr_3,
                "oracle": oracle,
                "errors": {f"t_cr_{k}": getattr(cct, f"err_{k}") for k in (1, 2, 3)},
                "failures": dict(cct.failures),
            },
            "wall_clock_s": cct.wall_clock,
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        c, t = d["cca"], d["cct"]
        cca = CcaReport(
            phi_cr_1=c["phi_cr_1"], phi_cr_2=c["phi_cr_2"], phi_cr_3=c["phi_cr_3"],
            h_2=c["h_2"], h_3=c["h_3"], S_d=c["S_d"], oracle_phi_cr=c["oracle"],
            **{f"err_{k}": c["errors"][f"phi_cr_{k}"] for k in (1, 2, 3)},
        )
        oracle = t["oracle"]
        numeric = isinstance(oracle, (int, float)) and not isinstance(oracle, bool)
        cct = CctReport(
            t_cr_1=t["t_cr_1"], t_cr_2=t["t_cr_2"], t_cr_3=t["t_cr_3"],
            oracle_t_cr=oracle if numeric else None,
            oracle_status="ok" if numeric else oracle,
            failures=dict(t["failures"]), wall_clock=d["wall_clock_s"],
            **{f"err_{k}": t["errors"][f"t_cr_{k}"] for k in (1, 2, 3)},
        )
        return cls(
            scenario=Scenario(**d["scenario"]),
            params=SystemParams(**d["params"]),
            integrator=IntegratorConfig(**d["integrator"]),
            i_q2=d["i_q2"], cca=cca, cct=cct, farm=d["farm"],
            tool_version=d["tool"]["version"], schema_version=d["schema_version"],
            extra=d.get("extra", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def _cell(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, float):
        return format_float(x)
    return str(x)


def _write_rows(path: str | Path | None, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def write_trajectory_csv(traj: Trajectory, path=None) -> str:
    rows = ((float(t), int(s), *(float(v) for v in rest)) for t, s, *rest in traj.rows(with_jumps=True))
    return _write_rows(path, Trajectory.COLUMNS, rows)


TABLE_COLUMNS = ("U_g2", "i_d2", "phi_cr", "phi_cr_1", "err_phi_1", "phi_cr_2", "err_phi_2",
                 "phi_cr_3", "err_phi_3", "t_cr", "t_cr_1", "err_t_1", "t_cr_2", "err_t_2",
                 "t_cr_3", "err_t_3", "reason")


def table_row(U_g2, i_d2, cca: CcaReport | None, cct: CctReport | None, reason: str = "") -> tuple:
    if cca is None or cct is None:
        return (U_g2, i_d2, *([math.nan] * (len(TABLE_COLUMNS) - 3)), reason)
    failures = "; ".join(f"{k}: {v}" for k, v in cct.failures.items())
    if cct.oracle_t_cr is None and cct.oracle_status:
        failures = "; ".join(s for s in (f"oracle: {cct.oracle_status}", failures) if s)
    nan = math.nan

    def v(x):
        return nan if x is None else x

    return (U_g2, i_d2, v(cca.oracle_phi_cr),
            v(cca.phi_cr_1), v(cca.err_1), v(cca.phi_cr_2), v(cca.err_2), v(cca.phi_cr_3), v(cca.err_3),
            v(cct.oracle_t_cr),
            v(cct.t_cr_1), v(cct.err_1), v(cct.t_cr_2), v(cct.err_2), v(cct.t_cr_3), v(cct.err_3),
            failures or reason)


def mean_abs_row(rows) -> tuple:
    """Final table row: mean absolute signed error of each error column over finite cells."""
    out: list = ["mean_abs", ""]
    for j, name in enumerate(TABLE_COLUMNS[2:-1], start=2):
        if name.startswith("err_"):
            vals = [abs(r[j]) for r in rows if not math.isnan(r[j])]
            out.append(sum(vals) / len(vals) if vals else math.nan)
        else:
            out.append("")
    out.append("")
    return tuple(out)


def write_table_csv(rows, path=None) -> str:
    rows = list(rows)
    return _write_rows(path, TABLE_COLUMNS, rows + [mean_abs_row(rows)])


def write_basin_csv(bm: BasinMap, path=None) -> str:
    rows = []
    for a, phi in enumerate(bm.phi_centers):
        for b, omega in enumerate(bm.omega_centers):
            rows.append((float(phi), float(omega), bool(bm.grid[a, b])))
    return _write_rows(path, ("phi", "omega", "inside"), rows)

