"""Desk-scale reference solver and industrial-solver interchange.

``solve_lp`` runs the built-in bounded-variable revised simplex,
``solve_milp`` adds best-first branch and bound on the integer (truck)
variables.  ``write_mps``/``read_mps`` move instances to and from
industrial solvers, and solution CSVs carry variable values either way.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from hsc_plan.builder import MilpInstance, key_to_str, str_to_key
from hsc_plan.solver.bnb import BnbOptions, solve_bnb
from hsc_plan.solver.mps import MpsFormatError, read_mps, write_mps
from hsc_plan.solver.simplex import SimplexOptions, solve_arrays

__all__ = [
    "Solution",
    "SolverStats",
    "solve_lp",
    "solve_milp",
    "write_mps",
    "read_mps",
    "MpsFormatError",
    "write_solution_csv",
    "read_solution_csv",
    "SimplexOptions",
    "BnbOptions",
]


@dataclass
class SolverStats:
    iterations: int = 0
    nodes: int = 0
    wall_time: float = 0.0
    gap: float | None = None


@dataclass
class Solution:
    status: str  # optimal | infeasible | unbounded | iteration-limit | node-limit
    objective_value: float | None
    values: dict[tuple, float] = field(default_factory=dict)
    solver_stats: SolverStats = field(default_factory=SolverStats)

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"

    def value(self, key: tuple, default: float | None = None) -> float:
        if key in self.values:
            return self.values[key]
        if default is not None:
            return default
        raise KeyError(key)


def _values_dict(instance: MilpInstance, x: np.ndarray) -> dict[tuple, float]:
    return {v.key: float(x[j]) for j, v in enumerate(instance.registry.variables)}


def solve_lp(instance: MilpInstance, *, feas_tol: float = 1e-7, opt_tol: float = 1e-7,
             max_iterations: int = 500_000, relax_integrality: bool = False) -> Solution:
    """Solve the LP with the built-in simplex.

    The instance must be continuous unless ``relax_integrality`` is set,
    in which case integrality flags are ignored.
    """
    if instance.has_integers() and not relax_integrality:
        raise ValueError(
            "instance has integer variables; use solve_milp or pass relax_integrality=True"
        )
    c, A, senses, rhs, lb, ub, _ = instance.to_arrays()
    options = SimplexOptions(feas_tol=feas_tol, opt_tol=opt_tol, max_iterations=max_iterations)
    status, x, obj, iters, wall = solve_arrays(c, A, senses, rhs, lb, ub, options)
    values = _values_dict(instance, x) if status == "optimal" else {}
    return Solution(status=status, objective_value=obj, values=values,
                    solver_stats=SolverStats(iterations=iters, nodes=0, wall_time=wall))


def solve_milp(instance: MilpInstance, *, gap_tol: float = 1e-4, int_tol: float = 1e-6,
               node_limit: int = 20_000, feas_tol: float = 1e-7, opt_tol: float = 1e-7,
               max_iterations: int = 500_000) -> Solution:
    """Branch-and-bound solve; returns the incumbent once the relative
    bound gap is at most ``gap_tol`` (gap achieved is in solver_stats)."""
    t0 = time.perf_counter()
    c, A, senses, rhs, lb, ub, int_mask = instance.to_arrays()
    options = BnbOptions(
        gap_tol=gap_tol, int_tol=int_tol, node_limit=node_limit,
        lp_options=SimplexOptions(feas_tol=feas_tol, opt_tol=opt_tol,
                                  max_iterations=max_iterations),
    )
    result = solve_bnb(c, A, senses, rhs, lb, ub, int_mask, options)
    values = _values_dict(instance, result.x) if result.x is not None else {}
    return Solution(
        status=result.status,
        objective_value=result.objective,
        values=values,
        solver_stats=SolverStats(iterations=result.iterations, nodes=result.nodes,
                                 wall_time=time.perf_counter() - t0, gap=result.gap),
    )


def write_solution_csv(solution: Solution, destination, instance: MilpInstance | None = None) -> None:
    """Write ``variable,value`` rows; registry order when available."""
    keys = [v.key for v in instance.registry.variables] if instance is not None \
        else sorted(solution.values, key=key_to_str)
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable", "value"])
        for key in keys:
            writer.writerow([key_to_str(key), repr(solution.values[key])])


def read_solution_csv(source, name_map=None) -> dict[tuple, float]:
    """Read ``variable,value`` rows into a key/value dict.

    ``name_map`` (the MPS sidecar) lets the CSV use external-solver
    column names instead of semantic keys.
    """
    translate = {}
    if name_map is not None:
        import json

        with open(name_map, "r", encoding="ascii") as mh:
            translate = json.load(mh).get("columns", {})
    out: dict[tuple, float] = {}
    with open(source, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["variable", "value"]:
            raise ValueError("solution CSV must start with a 'variable,value' header")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"solution CSV line {line_no}: need variable,value")
            name = row[0].strip()
            name = translate.get(name, name)
            try:
                key = str_to_key(name)
            except ValueError as exc:
                raise ValueError(f"solution CSV line {line_no}: {exc}") from None
            out[key] = float(row[1])
    return out
