"""Command-line front end.

Subcommands::

    hsc-plan run CASE   [--carbon-price X ...] [--elec-capex Y ...]
                        [--pipe-cost-factor Z ...] [--truck-mode M ...]
                        [--solver builtin|export-only] --out DIR
    hsc-plan sweep CASE ... (same flags, needs >= 2 scenario points)
    hsc-plan audit CASE SOLUTION.csv [--name-map MAP.json]

Exit codes: 0 ok, 2 audit failed, 3 solver failed, 4 input error.
Scenario points of a sweep may run in parallel processes; set
HSC_PLAN_THREADS to cap the worker count (default 1, serial).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path

EXIT_OK = 0
EXIT_AUDIT = 2
EXIT_SOLVER = 3
EXIT_INPUT = 4

AUDIT_TOL = 1e-6


@dataclass
class RunManifest:
    case: Path
    out_dir: Path
    carbon_prices: list[float] = field(default_factory=list)  # empty: case value
    elec_capexes: list[float] = field(default_factory=list)
    pipe_cost_factors: list[float] = field(default_factory=list)
    truck_modes: list[str] = field(default_factory=list)
    solver: str = "builtin"
    gap_tol: float = 1e-4
    deterministic: bool = True

    def points(self) -> list[dict]:
        axes = [
            [("carbon_price", v) for v in self.carbon_prices] or [("carbon_price", None)],
            [("electrolyzer_capex_override", v) for v in self.elec_capexes]
            or [("electrolyzer_capex_override", None)],
            [("pipeline_cost_factor", v) for v in self.pipe_cost_factors]
            or [("pipeline_cost_factor", None)],
            [("truck_mode", v) for v in self.truck_modes] or [("truck_mode", None)],
        ]
        out = []
        for combo in product(*axes):
            out.append({k: v for k, v in combo if v is not None})
        return out


def point_label(overrides: dict) -> str:
    def num(v):
        return f"{v:g}"

    parts = []
    parts.append("cp" + (num(overrides["carbon_price"]) if "carbon_price" in overrides else "case"))
    parts.append("ec" + (num(overrides["electrolyzer_capex_override"])
                         if "electrolyzer_capex_override" in overrides else "case"))
    parts.append("pf" + (num(overrides["pipeline_cost_factor"])
                         if "pipeline_cost_factor" in overrides else "case"))
    parts.append(overrides.get("truck_mode", "case"))
    return "_".join(parts)


def _apply_overrides(scenario, overrides: dict):
    return replace(scenario, **overrides) if overrides else scenario


def run_point(case_root: Path, out_dir: Path, overrides: dict, solver: str,
              gap_tol: float) -> dict:
    """Build, solve (or export), audit, and save one scenario point.

    Returns a summary record; never raises for solver/audit trouble, only
    for input errors (CaseError/BuildError propagate).
    """
    from hsc_plan.builder import build
    from hsc_plan.caseio import (capacity_summary, generation_breakdown, load_case,
                                 save_results)
    from hsc_plan.auditing import audit
    from hsc_plan.solver import solve_lp, solve_milp, write_mps

    network, catalog, timegrid, scenario = load_case(case_root)
    scenario = _apply_overrides(scenario, overrides)
    label = point_label(overrides)
    point_dir = out_dir / label
    instance = build(network, catalog, timegrid, scenario)
    record = {
        "label": label,
        "carbon_price": scenario.carbon_price,
        "electrolyzer_capex": scenario.electrolyzer_capex_override,
        "pipeline_cost_factor": scenario.pipeline_cost_factor,
        "truck_mode": scenario.truck_mode,
        "status": "",
        "audit_pass": "",
        "objective_per_year": "",
        "unit_cost_per_kg": "",
    }

    if solver == "export-only":
        point_dir.mkdir(parents=True, exist_ok=True)
        write_mps(instance, point_dir / "instance.mps")
        record["status"] = "exported"
        return record

    if instance.has_integers():
        solution = solve_milp(instance, gap_tol=gap_tol)
    else:
        solution = solve_lp(instance)
    record["status"] = solution.status
    if solution.status != "optimal":
        return record

    report = audit(solution, network, catalog, timegrid, scenario, tol=AUDIT_TOL)
    save_results(point_dir, solution, report, network, catalog, timegrid, scenario, instance)
    record["audit_pass"] = "PASS" if report.passed else "FAIL"
    record["objective_per_year"] = repr(solution.objective_value)
    record["unit_cost_per_kg"] = "" if report.unit_hydrogen_cost is None \
        else repr(report.unit_hydrogen_cost)
    def tidy(x: float) -> float:
        return 0.0 if abs(x) < 1e-9 else x

    caps = capacity_summary(solution, network, catalog, scenario)
    record["capacities"] = {k: tidy(v) for k, v in caps.items()}
    gen = generation_breakdown(solution, network, catalog, timegrid)
    total_gen = sum(gen.values())
    record["generation_share"] = {
        k: tidy(v / total_gen if total_gen > 0 else 0.0) for k, v in gen.items()
    }
    return record


def _run_points(manifest: RunManifest) -> tuple[list[dict], int]:
    points = manifest.points()
    labels = [point_label(p) for p in points]
    if len(set(labels)) != len(labels):
        raise ValueError("scenario points are not distinct")
    workers = int(os.environ.get("HSC_PLAN_THREADS", "1") or "1")
    records: list[dict] = []
    if workers > 1 and len(points) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_point, manifest.case, manifest.out_dir, p,
                            manifest.solver, manifest.gap_tol)
                for p in points
            ]
            records = [f.result() for f in futures]
    else:
        for p in points:
            records.append(run_point(manifest.case, manifest.out_dir, p,
                                      manifest.solver, manifest.gap_tol))

    code = EXIT_OK
    for rec in records:
        if rec["status"] not in ("optimal", "exported"):
            code = max(code, EXIT_SOLVER)
        elif rec.get("audit_pass") == "FAIL":
            code = max(code, EXIT_AUDIT)
        print(f"{rec['label']}: status={rec['status']}"
              + (f" audit={rec['audit_pass']}" if rec.get("audit_pass") else "")
              + (f" unit_cost={rec['unit_cost_per_kg']}" if rec.get("unit_cost_per_kg") else ""))
    return records, code


def _axis_sort_key(rec: dict):
    return (
        rec["carbon_price"],
        rec["electrolyzer_capex"] if rec["electrolyzer_capex"] is not None else -1.0,
        rec["pipeline_cost_factor"],
        rec["truck_mode"],
    )


def write_sweep_csv(records: list[dict], path: Path) -> None:
    records = sorted(records, key=_axis_sort_key)
    cap_cols: list[str] = []
    share_cols: list[str] = []
    for rec in records:
        for col in rec.get("capacities", {}):
            if col not in cap_cols:
                cap_cols.append(col)
        for col in rec.get("generation_share", {}):
            if col not in share_cols:
                share_cols.append(col)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["carbon_price", "electrolyzer_capex", "pipeline_cost_factor", "truck_mode",
             "status", "audit_pass", "objective_per_year", "unit_cost_per_kg"]
            + [f"share_{c}" for c in share_cols] + cap_cols)
        for rec in records:
            row = [
                repr(rec["carbon_price"]),
                "" if rec["electrolyzer_capex"] is None else repr(rec["electrolyzer_capex"]),
                repr(rec["pipeline_cost_factor"]),
                rec["truck_mode"],
                rec["status"],
                rec.get("audit_pass", ""),
                rec.get("objective_per_year", ""),
                rec.get("unit_cost_per_kg", ""),
            ]
            row += [repr(rec["generation_share"][c]) if c in rec.get("generation_share", {})
                    else "" for c in share_cols]
            row += [repr(rec["capacities"][c]) if c in rec.get("capacities", {}) else ""
                    for c in cap_cols]
            writer.writerow(row)


def cmd_run(manifest: RunManifest) -> int:
    from hsc_plan.builder import BuildError
    from hsc_plan.caseio import CaseError

    try:
        _, code = _run_points(manifest)
    except (CaseError, BuildError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


def cmd_sweep(manifest: RunManifest) -> int:
    from hsc_plan.builder import BuildError
    from hsc_plan.caseio import CaseError

    if len(manifest.points()) < 2:
        print("sweep needs at least two scenario points", file=sys.stderr)
        return EXIT_INPUT
    try:
        records, code = _run_points(manifest)
        write_sweep_csv(records, manifest.out_dir / "sweep.csv")
    except (CaseError, BuildError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


def cmd_audit(case_root: Path, solution_csv: Path, name_map: Path | None) -> int:
    from hsc_plan.auditing import MissingVariableError, audit
    from hsc_plan.builder import BuildError
    from hsc_plan.caseio import CaseError, load_case
    from hsc_plan.solver import Solution, read_solution_csv

    try:
        network, catalog, timegrid, scenario = load_case(case_root)
        values = read_solution_csv(solution_csv, name_map)
    except (CaseError, BuildError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    solution = Solution(status="optimal", objective_value=None, values=values)
    # trust the CSV objective implied by the breakdown; callers comparing a
    # solver objective should check the cost CSV instead
    try:
        from hsc_plan.auditing import recompute_objective

        breakdown = recompute_objective(solution, network, catalog, timegrid, scenario)
        solution.objective_value = sum(breakdown.values())
        report = audit(solution, network, catalog, timegrid, scenario, tol=AUDIT_TOL)
    except MissingVariableError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(report.to_json())
    return EXIT_OK if report.passed else EXIT_AUDIT


def _add_shared_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("case", type=Path, help="case bundle directory")
    sub.add_argument("--carbon-price", type=float, action="append", default=[],
                     metavar="DOLLARS_PER_TONNE", help="override carbon price (repeatable)")
    sub.add_argument("--elec-capex", type=float, action="append", default=[],
                     metavar="DOLLARS_PER_UNIT",
                     help="override electrolyzer unit capex (repeatable)")
    sub.add_argument("--pipe-cost-factor", type=float, action="append", default=[],
                     metavar="FRACTION", help="scale pipeline capital cost (repeatable)")
    sub.add_argument("--truck-mode", action="append", default=[],
                     choices=["relaxed", "integer", "fixed_route_existing"],
                     help="truck scheduling mode (repeatable)")
    sub.add_argument("--solver", choices=["builtin", "export-only"], default="builtin")
    sub.add_argument("--gap-tol", type=float, default=1e-4,
                     help="relative MILP gap tolerance (integer mode)")
    sub.add_argument("--out", type=Path, required=True, help="output directory")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsc-plan",
                                     description="Hydrogen supply chain planning")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve (or export) scenario points of a case")
    _add_shared_flags(p_run)
    p_sweep = sub.add_parser("sweep", help="run >= 2 scenario points and merge a sweep CSV")
    _add_shared_flags(p_sweep)
    p_audit = sub.add_parser("audit", help="audit an externally produced solution CSV")
    p_audit.add_argument("case", type=Path)
    p_audit.add_argument("solution", type=Path, help="CSV of variable,value")
    p_audit.add_argument("--name-map", type=Path, default=None,
                         help="MPS sidecar name map for external column names")
    return parser


def _manifest_from_args(args) -> RunManifest:
    return RunManifest(
        case=args.case,
        out_dir=args.out,
        carbon_prices=args.carbon_price,
        elec_capexes=args.elec_capex,
        pipe_cost_factors=args.pipe_cost_factor,
        truck_modes=args.truck_mode,
        solver=args.solver,
        gap_tol=args.gap_tol,
    )


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(_manifest_from_args(args))
    if args.command == "sweep":
        return cmd_sweep(_manifest_from_args(args))
    if args.command == "audit":
        return cmd_audit(args.case, args.solution, args.name_map)
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
