"""Transient synchronization of grid-following converters through low-voltage ride-through.

A switched generalized-swing-equation model of the PLL (``model``, ``sim``)
and an improved equal-area analyzer for critical clearing angles and times
(``eac``). ``cli`` exposes both from the command line.
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    REFERENCE_PARAMS,
    PllState,
    Scenario,
    SystemParams,
    reference_scenario,
)
from .integrate import IntegratorConfig  # noqa: E402
from .sim import basin_map, oracle_cct, simulate_gse, simulate_gse_batch, simulate_scenario  # noqa: E402
from .eac import analyze, cca_first, cca_second, cca_third, eac_inputs  # noqa: E402

__all__ = [
    "__version__",
    "REFERENCE_PARAMS",
    "PllState",
    "Scenario",
    "SystemParams",
    "reference_scenario",
    "IntegratorConfig",
    "basin_map",
    "oracle_cct",
    "simulate_gse",
    "simulate_gse_batch",
    "simulate_scenario",
    "analyze",
    "cca_first",
    "cca_second",
    "cca_third",
    "eac_inputs",
]
