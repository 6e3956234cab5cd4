"""Solve the bundled two-zone mini case in all three truck modes and print
a comparison table: objective, unit cost, truck fleet, and audit verdict.

Usage: python scripts/run_mini.py [--integer]
The integer variant takes tens of seconds; it is skipped by default.
"""

from __future__ import annotations

import dataclasses
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hsc_plan.auditing import audit
from hsc_plan.builder import build
from hsc_plan.caseio import capacity_summary, load_case
from hsc_plan.data import case_path
from hsc_plan.solver import solve_lp, solve_milp


def run(mode: str):
    network, catalog, timegrid, scenario = load_case(case_path("northeast_mini"))
    scenario = dataclasses.replace(scenario, truck_mode=mode)
    case = (network, catalog, timegrid, scenario)
    instance = build(*case)
    start = time.perf_counter()
    if instance.has_integers():
        solution = solve_milp(instance, gap_tol=1e-3)
    else:
        solution = solve_lp(instance)
    elapsed = time.perf_counter() - start
    report = audit(solution, *case)
    caps = capacity_summary(solution, network, catalog, scenario)
    return {
        "mode": mode,
        "status": solution.status,
        "seconds": elapsed,
        "objective": solution.objective_value,
        "unit_cost": report.unit_hydrogen_cost,
        "trucks_tonne": caps["Truck Capacity (tonne)"],
        "storage_tonne": caps["Storage Capacity (tonne)"],
        "audit": "PASS" if report.passed else "FAIL",
    }


def main() -> None:
    modes = ["relaxed", "fixed_route_existing"]
    if "--integer" in sys.argv:
        modes.insert(1, "integer")
    rows = [run(mode) for mode in modes]
    header = f"{'mode':<22}{'status':<10}{'time':>7}{'unit $/kg':>11}{'trucks t':>10}{'storage t':>11}  audit"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r['mode']:<22}{r['status']:<10}{r['seconds']:>6.1f}s"
              f"{r['unit_cost']:>11.3f}{r['trucks_tonne']:>10.1f}"
              f"{r['storage_tonne']:>11.1f}  {r['audit']}")


if __name__ == "__main__":
    main()
