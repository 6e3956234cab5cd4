"""Hydrogen supply chain planning toolkit.

Builds a least-cost capacity-expansion LP/MILP over hydrogen generation,
storage, compression, pipelines (with linepack) and flexibly scheduled
trucks, solves it at desk scale with a built-in simplex / branch-and-bound
solver, exports MPS for industrial solvers, and audits solutions
independently of the built matrix.
"""

from hsc_plan.model import (
    GenerationTech,
    Network,
    Path,
    PipelineType,
    Scenario,
    StorageTech,
    TechnologyCatalog,
    TimeGrid,
    TruckType,
    Zone,
    annuity_factor,
    validate_network,
)
from hsc_plan.builder import MilpInstance, VariableRegistry, build
from hsc_plan.solver import Solution, solve_lp, solve_milp
from hsc_plan.auditing import AuditReport, audit, recompute_objective, unit_hydrogen_cost

__version__ = "0.1.0"

__all__ = [
    "Zone",
    "Path",
    "Network",
    "TimeGrid",
    "GenerationTech",
    "StorageTech",
    "TruckType",
    "PipelineType",
    "TechnologyCatalog",
    "Scenario",
    "annuity_factor",
    "validate_network",
    "VariableRegistry",
    "MilpInstance",
    "build",
    "Solution",
    "solve_lp",
    "solve_milp",
    "AuditReport",
    "audit",
    "recompute_objective",
    "unit_hydrogen_cost",
]
