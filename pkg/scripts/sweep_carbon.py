"""Carbon-price sweep on the bundled mini case.

Shows the generation mix walking from reformers toward electrolysis as the
carbon price rises, and the unit hydrogen cost along the way.

Usage: python scripts/sweep_carbon.py [price ...]   (default 0 50 100 200)
"""

from __future__ import annotations

import dataclasses
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hsc_plan.auditing import audit
from hsc_plan.builder import build
from hsc_plan.caseio import generation_breakdown, load_case
from hsc_plan.data import case_path
from hsc_plan.solver import solve_lp


def main() -> None:
    prices = [float(a) for a in sys.argv[1:]] or [0.0, 50.0, 100.0, 200.0]
    network, catalog, timegrid, base = load_case(case_path("northeast_mini"))
    tech_ids = [t.id for t in catalog.generation]
    print(f"{'carbon $/t':>10}  " + "".join(f"{t:>14}" for t in tech_ids)
          + f"{'unit $/kg':>12}")
    for price in prices:
        scenario = dataclasses.replace(base, carbon_price=price)
        solution = solve_lp(build(network, catalog, timegrid, scenario))
        assert solution.status == "optimal", solution.status
        report = audit(solution, network, catalog, timegrid, scenario)
        gen = generation_breakdown(solution, network, catalog, timegrid)
        total = sum(gen.values()) or 1.0
        shares = "".join(f"{gen[t] / total:>13.1%} " for t in tech_ids)
        print(f"{price:>10.0f}  {shares}{report.unit_hydrogen_cost:>11.3f}")


if __name__ == "__main__":
    main()
