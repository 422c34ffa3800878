"""Sectioned plain-text run configuration.

Example::

    [grid]
    X_g = 0.5
    U_g1 = 1.0

    [lvrt]
    U_g2 = 0.2
    i_d2 = 0.4
    i_q2 = auto
    t_fault = 0.1

    [sweep]
    U_g2 = 0.2, 0.2, 0.1
    i_d2 = 0.4, 0.5, 0.25

Every section except ``lvrt`` is optional and falls back to the reference
parameter set. Sweep lists are paired element by element. Unknown sections or
keys are errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path

from .integrate import IntegratorConfig
from .model import SystemParams, Scenario

__all__ = ["ConfigError", "FarmConfig", "RunConfig", "parse_config", "load_config", "dump_config"]


class ConfigError(ValueError):
    """Malformed, incomplete or inconsistent configuration."""


@dataclass(frozen=True)
class FarmConfig:
    n: int = 10
    X_line: float = 0.05


@dataclass(frozen=True)
class RunConfig:
    params: SystemParams
    scenario: Scenario
    integrator: IntegratorConfig = IntegratorConfig()
    horizon: float | None = None
    sweep: tuple[tuple[float, float], ...] | None = None
    farm: FarmConfig | None = None

    def sweep_scenarios(self) -> list[Scenario]:
        if not self.sweep:
            raise ConfigError("configuration has no [sweep] section")
        return [self.scenario.replace(U_g2=u, i_d2=i) for u, i in self.sweep]


# section -> key -> (target, field name)
_LAYOUT = {
    "grid": {"X_g": "params", "U_g1": "scenario", "omega_0": "params"},
    "pll": {"k_ppll": "params", "k_ipll": "params"},
    "lvrt": {"U_g2": "scenario", "i_d2": "scenario", "i_d1": "scenario", "i_q2": "scenario",
             "t_fault": "scenario", "t_clear": "scenario", "device": "scenario"},
    "ramp": {"K_ramp": "params"},
    "tvc": {"K_pV": "params", "K_iV": "params", "U_tref": "params"},
    "limits": {"I_max": "params"},
    "integrator": {"method": "integrator", "step": "integrator", "event_tol": "integrator",
                   "rel_tol": "integrator", "abs_tol": "integrator", "horizon_s": "horizon"},
    "sweep": {"U_g2": "sweep", "i_d2": "sweep"},
    "farm": {"n": "farm", "X_line": "farm"},
}
_REQUIRED = {"lvrt": ("U_g2", "i_d2")}


def _number(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _numbers(section: str, key: str, raw: str) -> list[float]:
    return [_number(section, key, part.strip()) for part in raw.split(",") if part.strip()]


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None

    for section in cp.sections():
        if section not in _LAYOUT:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in cp[section]:
            if key not in _LAYOUT[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not cp.has_option(section, key):
                raise ConfigError(f"{source}: missing required field [{section}] {key}")

    params_kw: dict = {}
    scen_kw: dict = {}
    integ_kw: dict = {}
    horizon = None
    for section in cp.sections():
        if section in ("sweep", "farm"):
            continue
        for key, raw in cp[section].items():
            target = _LAYOUT[section][key]
            if target == "params":
                params_kw[key] = _number(section, key, raw)
            elif target == "horizon":
                horizon = _number(section, key, raw)
            elif target == "integrator":
                integ_kw[key] = raw.strip() if key == "method" else _number(section, key, raw)
            elif key == "i_q2":
                scen_kw[key] = None if raw.strip().lower() == "auto" else _number(section, key, raw)
            elif key == "device":
                scen_kw[key] = raw.strip()
            else:
                scen_kw[key] = _number(section, key, raw)

    sweep = None
    if cp.has_section("sweep"):
        u = _numbers("sweep", "U_g2", cp.get("sweep", "U_g2", fallback=""))
        i = _numbers("sweep", "i_d2", cp.get("sweep", "i_d2", fallback=""))
        if not u or len(u) != len(i):
            raise ConfigError(f"{source}: [sweep] U_g2 and i_d2 must be non-empty lists of equal length")
        sweep = tuple(zip(u, i))

    farm = None
    if cp.has_section("farm"):
        n = _number("farm", "n", cp.get("farm", "n", fallback="10"))
        if n != int(n) or n < 1:
            raise ConfigError(f"{source}: [farm] n must be a positive integer, got {n}")
        farm = FarmConfig(int(n), _number("farm", "X_line", cp.get("farm", "X_line", fallback="0.05")))

    try:
        params = SystemParams(**params_kw)
        scenario = Scenario(**scen_kw)
        scenario.validate(params)
        integrator = IntegratorConfig(**integ_kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if horizon is not None and not horizon > 0:
        raise ConfigError(f"{source}: [integrator] horizon_s must be positive")
    return RunConfig(params, scenario, integrator, horizon, sweep, farm)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, str(path))


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (int, float)) else str(x)


def dump_config(cfg: RunConfig) -> str:
    """Serialize so that :func:`parse_config` restores an equal ``RunConfig``."""
    values = {
        "params": {f.name: getattr(cfg.params, f.name) for f in fields(cfg.params)},
        "scenario": {f.name: getattr(cfg.scenario, f.name) for f in fields(cfg.scenario)},
        "integrator": {f.name: getattr(cfg.integrator, f.name) for f in fields(cfg.integrator)},
    }
    lines: list[str] = []
    for section, keys in _LAYOUT.items():
        if section in ("sweep", "farm"):
            continue
        body = []
        for key, target in keys.items():
            if target == "horizon":
                if cfg.horizon is not None:
                    body.append(f"horizon_s = {_fmt(cfg.horizon)}")
                continue
            value = values[target][key]
            if key == "i_q2" and value is None:
                value = "auto"
            elif key == "t_clear" and value is None:
                continue
            body.append(f"{key} = {_fmt(value)}")
        lines += [f"[{section}]", *body, ""]
    if cfg.sweep:
        lines += ["[sweep]",
                  "U_g2 = " + ", ".join(_fmt(u) for u, _ in cfg.sweep),
                  "i_d2 = " + ", ".join(_fmt(i) for _, i in cfg.sweep), ""]
    if cfg.farm:
        lines += ["[farm]", f"n = {cfg.farm.n}", f"X_line = {_fmt(cfg.farm.X_line)}", ""]
    return "\n".join(lines)
