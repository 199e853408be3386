"""Tie-line security regions for multi-period DC networks and one-shot coordination."""

from __future__ import annotations

__version__ = "0.1.0"

from .network import (  # noqa: E402
    Branch,
    Bus,
    DemandSite,
    Generator,
    Interconnection,
    RegionNetwork,
    RenewableSite,
    TieLinePort,
    TieLink,
    build_matrices,
    validate_network,
)
from .lp import LpProblem, LpSolution, solve_lp  # noqa: E402

__all__ = [
    "Branch",
    "Bus",
    "DemandSite",
    "Generator",
    "Interconnection",
    "LpProblem",
    "LpSolution",
    "RegionNetwork",
    "RenewableSite",
    "TieLinePort",
    "TieLink",
    "__version__",
    "build_matrices",
    "solve_lp",
    "validate_network",
]
