"""Case bundle loading, saving, and result export.

A case bundle is a directory of YAML configs plus CSV time series::

    case/
      network.yaml    zones and transport paths
      catalog.yaml    technology parameter records
      timegrid.yaml   representative periods and annual weights
      scenario.yaml   prices, demand, policy knobs, series file references
      series/*.csv    "zone,timestep,value" tables

Demand may be given directly as a series or derived as a per-zone average
level times a normalized refuelling profile.  See docs/data-formats.md for
the full schema.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import yaml

from hsc_plan.auditing import AuditReport, COST_TERMS
from hsc_plan.model import (
    GenerationTech,
    Network,
    Path as TransportPath,
    PipelineType,
    Scenario,
    StorageTech,
    TechnologyCatalog,
    TimeGrid,
    TruckType,
    Zone,
)

_SERIES_HEADER = ["zone", "timestep", "value"]


class CaseError(ValueError):
    """Schema or consistency problem in a case bundle."""


@dataclass(frozen=True)
class CaseBundle:
    root: Path

    @property
    def network_file(self) -> Path:
        return self.root / "network.yaml"

    @property
    def catalog_file(self) -> Path:
        return self.root / "catalog.yaml"

    @property
    def timegrid_file(self) -> Path:
        return self.root / "timegrid.yaml"

    @property
    def scenario_file(self) -> Path:
        return self.root / "scenario.yaml"

    def check(self) -> None:
        for p in (self.network_file, self.catalog_file, self.timegrid_file, self.scenario_file):
            if not p.is_file():
                raise CaseError(f"{p}: missing case file")


def _load_yaml(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except FileNotFoundError:
        raise CaseError(f"{path}: not found") from None
    except yaml.YAMLError as exc:
        raise CaseError(f"{path}: {exc}") from None


def _take(mapping: dict, path: Path, key: str, required: bool = True, default=None):
    if key in mapping:
        return mapping.pop(key)
    if required:
        raise CaseError(f"{path}: missing required key {key!r}")
    return default


def _no_extras(mapping: dict, path: Path, where: str) -> None:
    if mapping:
        raise CaseError(f"{path}: unknown keys in {where}: {sorted(mapping)}")


def read_series_csv(path: Path) -> dict[str, dict[int, float]]:
    """Read a "zone,timestep,value" CSV into {zone: {t: value}}."""
    out: dict[str, dict[int, float]] = {}
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except FileNotFoundError:
        raise CaseError(f"{path}: not found") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != _SERIES_HEADER:
            raise CaseError(f"{path}: first line must be 'zone,timestep,value'")
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3:
                raise CaseError(f"{path}: line {line_no}: need zone,timestep,value")
            zone = row[0].strip()
            try:
                t = int(row[1])
                v = float(row[2])
            except ValueError:
                raise CaseError(f"{path}: line {line_no}: bad timestep or value") from None
            out.setdefault(zone, {})
            if t in out[zone]:
                raise CaseError(f"{path}: line {line_no}: duplicate entry for ({zone}, {t})")
            out[zone][t] = v
    return out


def write_series_csv(path: Path, series: dict[str, tuple[float, ...]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_SERIES_HEADER)
        for zone in series:
            for t, v in enumerate(series[zone]):
                writer.writerow([zone, t, repr(float(v))])


def _series_to_tuples(raw: dict[str, dict[int, float]], n_steps: int, zones: list[str],
                      path: Path) -> dict[str, tuple[float, ...]]:
    out = {}
    for zone in zones:
        if zone not in raw:
            raise CaseError(f"{path}: no rows for zone {zone!r}")
        got = raw[zone]
        if len(got) != n_steps:
            raise CaseError(
                f"{path}: zone {zone!r} has {len(got)} timesteps, timegrid needs {n_steps}")
        missing = [t for t in range(n_steps) if t not in got]
        if missing:
            raise CaseError(f"{path}: zone {zone!r} missing timesteps {missing[:5]}")
        out[zone] = tuple(got[t] for t in range(n_steps))
    return out


def _load_series_spec(spec, case_root: Path, n_steps: int, zones: list[str],
                      scen_path: Path, what: str) -> dict[str, tuple[float, ...]]:
    """A series spec is a CSV path, or {constant: v}, or for demand a
    {average: {zone: level}, profile: csv} pair."""
    if isinstance(spec, str):
        raw = read_series_csv(case_root / spec)
        return _series_to_tuples(raw, n_steps, zones, case_root / spec)
    if isinstance(spec, dict) and "constant" in spec:
        v = float(spec["constant"])
        return {z: tuple([v] * n_steps) for z in zones}
    if isinstance(spec, dict) and "average" in spec:
        avg = spec.get("average") or {}
        profile_ref = spec.get("profile")
        if profile_ref is None:
            raise CaseError(f"{scen_path}: {what}: 'average' needs a 'profile' CSV")
        raw = read_series_csv(case_root / profile_ref)
        prof = _series_to_tuples(raw, n_steps, zones, case_root / profile_ref)
        missing = [z for z in zones if z not in avg]
        if missing:
            raise CaseError(f"{scen_path}: {what}: no average level for zones {missing}")
        return {
            z: tuple(float(avg[z]) * u for u in prof[z])
            for z in zones
        }
    raise CaseError(f"{scen_path}: {what}: expected a CSV path, {{constant: v}}, "
                    f"or {{average: ..., profile: ...}}")


# ---------------------------------------------------------------------------
# loading


def load_network(path: Path) -> Network:
    doc = _load_yaml(path)
    if not isinstance(doc, dict):
        raise CaseError(f"{path}: expected a mapping")
    zones = []
    for entry in _take(doc, path, "zones"):
        entry = dict(entry)
        try:
            zones.append(Zone(
                id=str(_take(entry, path, "id")),
                name=str(_take(entry, path, "name", required=False, default="")),
                allow_central_smr=bool(_take(entry, path, "allow_central_smr",
                                             required=False, default=True)),
                eligible_generation=frozenset(_take(entry, path, "eligible_generation",
                                                    required=False, default=())),
                eligible_storage=frozenset(_take(entry, path, "eligible_storage",
                                                 required=False, default=())),
            ))
        except ValueError as exc:
            raise CaseError(f"{path}: zone entry: {exc}") from None
        _no_extras(entry, path, f"zone {zones[-1].id}")
    mirror = bool(doc.pop("mirror_paths", True))
    paths: list[TransportPath] = []
    seen: set[tuple[str, str]] = set()
    for entry in _take(doc, path, "paths", required=False, default=()) or ():
        entry = dict(entry)
        try:
            p = TransportPath(
                from_zone=str(_take(entry, path, "from")),
                to_zone=str(_take(entry, path, "to")),
                distance_miles=float(_take(entry, path, "distance_miles")),
                travel_delay_hours=int(_take(entry, path, "travel_delay_hours",
                                             required=False, default=0)),
            )
        except ValueError as exc:
            raise CaseError(f"{path}: path entry: {exc}") from None
        _no_extras(entry, path, f"path {p.from_zone}->{p.to_zone}")
        paths.append(p)
        seen.add(p.key)
    if mirror:
        for p in list(paths):
            if (p.to_zone, p.from_zone) not in seen:
                paths.append(TransportPath(
                    from_zone=p.to_zone, to_zone=p.from_zone,
                    distance_miles=p.distance_miles,
                    travel_delay_hours=p.travel_delay_hours))
                seen.add((p.to_zone, p.from_zone))
    _no_extras(doc, path, "network")
    return Network(zones=tuple(zones), paths=tuple(paths))


def _load_records(path: Path, entries, cls, what: str):
    out = []
    for entry in entries or ():
        try:
            out.append(cls(**dict(entry)))
        except (TypeError, ValueError) as exc:
            raise CaseError(f"{path}: {what} entry: {exc}") from None
    return tuple(out)


def load_catalog(path: Path) -> TechnologyCatalog:
    doc = _load_yaml(path)
    if not isinstance(doc, dict):
        raise CaseError(f"{path}: expected a mapping")
    catalog = TechnologyCatalog(
        generation=_load_records(path, doc.pop("generation", ()), GenerationTech, "generation"),
        storage=_load_records(path, doc.pop("storage", ()), StorageTech, "storage"),
        trucks=_load_records(path, doc.pop("trucks", ()), TruckType, "trucks"),
        pipelines=_load_records(path, doc.pop("pipelines", ()), PipelineType, "pipelines"),
    )
    _no_extras(doc, path, "catalog")
    return catalog


def load_timegrid(path: Path) -> TimeGrid:
    doc = _load_yaml(path)
    if not isinstance(doc, dict):
        raise CaseError(f"{path}: expected a mapping")
    step_hours = float(_take(doc, path, "step_hours", required=False, default=1.0))
    period_specs = _take(doc, path, "periods")
    lengths = []
    period_weights = []
    for entry in period_specs:
        entry = dict(entry)
        lengths.append(int(_take(entry, path, "steps")))
        period_weights.append(_take(entry, path, "weight", required=False))
        _no_extras(entry, path, "period")
    explicit = _take(doc, path, "weights", required=False)
    _no_extras(doc, path, "timegrid")
    total = sum(lengths)
    if explicit is not None:
        weights = tuple(float(w) for w in explicit)
    elif all(w is not None for w in period_weights):
        weights = tuple(float(w) for w, n in zip(period_weights, lengths) for _ in range(n))
    elif all(w is None for w in period_weights):
        uniform = 8760.0 / (total * step_hours)
        weights = tuple([uniform] * total)
    else:
        raise CaseError(f"{path}: give 'weight' for every period or for none")
    try:
        return TimeGrid(period_lengths=tuple(lengths), weights=weights, step_hours=step_hours)
    except ValueError as exc:
        raise CaseError(f"{path}: {exc}") from None


def load_scenario(path: Path, network: Network, timegrid: TimeGrid,
                  case_root: Path) -> Scenario:
    doc = _load_yaml(path)
    if not isinstance(doc, dict):
        raise CaseError(f"{path}: expected a mapping")
    series = _take(doc, path, "series")
    zones = [z.id for z in network.zones]
    n = timegrid.n_steps
    demand = _load_series_spec(_take(series, path, "demand"), case_root, n, zones, path, "demand")
    elec = _load_series_spec(_take(series, path, "electricity_price"), case_root, n, zones,
                             path, "electricity_price")
    gas = _load_series_spec(_take(series, path, "gas_price"), case_root, n, zones,
                            path, "gas_price")
    _no_extras(series, path, "series")
    kwargs = dict(
        carbon_price=float(_take(doc, path, "carbon_price", required=False, default=0.0)),
        lost_load_cost=float(_take(doc, path, "lost_load_cost", required=False, default=1e7)),
        discount_rate=float(_take(doc, path, "discount_rate", required=False, default=0.07)),
        pipeline_cost_factor=float(_take(doc, path, "pipeline_cost_factor",
                                         required=False, default=1.0)),
        truck_mode=str(_take(doc, path, "truck_mode", required=False, default="relaxed")),
    )
    override = _take(doc, path, "electrolyzer_capex_override", required=False)
    if override is not None:
        kwargs["electrolyzer_capex_override"] = float(override)
    _no_extras(doc, path, "scenario")
    try:
        return Scenario(demand_series=demand, price_series=elec, gas_price_series=gas, **kwargs)
    except ValueError as exc:
        raise CaseError(f"{path}: {exc}") from None


def load_case(root) -> tuple[Network, TechnologyCatalog, TimeGrid, Scenario]:
    """Load and validate a case bundle directory."""
    bundle = CaseBundle(root=Path(root))
    bundle.check()
    network = load_network(bundle.network_file)
    catalog = load_catalog(bundle.catalog_file)
    timegrid = load_timegrid(bundle.timegrid_file)
    scenario = load_scenario(bundle.scenario_file, network, timegrid, bundle.root)
    return network, catalog, timegrid, scenario


# ---------------------------------------------------------------------------
# saving


def _dump_yaml(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=False)


def save_case(root, network: Network, catalog: TechnologyCatalog,
              timegrid: TimeGrid, scenario: Scenario) -> CaseBundle:
    """Write a bundle that :func:`load_case` reads back identically."""
    bundle = CaseBundle(root=Path(root))
    _dump_yaml(bundle.network_file, {
        "zones": [
            {
                "id": z.id,
                "name": z.name,
                "allow_central_smr": z.allow_central_smr,
                "eligible_generation": sorted(z.eligible_generation),
                "eligible_storage": sorted(z.eligible_storage),
            }
            for z in network.zones
        ],
        "mirror_paths": False,
        "paths": [
            {
                "from": p.from_zone,
                "to": p.to_zone,
                "distance_miles": p.distance_miles,
                "travel_delay_hours": p.travel_delay_hours,
            }
            for p in network.paths
        ],
    })
    def records(group):
        out = []
        for tech in group:
            rec = {}
            for name in tech.__dataclass_fields__:
                rec[name] = getattr(tech, name)
            out.append(rec)
        return out

    _dump_yaml(bundle.catalog_file, {
        "generation": records(catalog.generation),
        "storage": records(catalog.storage),
        "trucks": records(catalog.trucks),
        "pipelines": records(catalog.pipelines),
    })
    _dump_yaml(bundle.timegrid_file, {
        "step_hours": timegrid.step_hours,
        "periods": [{"steps": n} for n in timegrid.period_lengths],
        "weights": list(timegrid.weights),
    })
    _dump_yaml(bundle.scenario_file, {
        "carbon_price": scenario.carbon_price,
        "lost_load_cost": scenario.lost_load_cost,
        "discount_rate": scenario.discount_rate,
        "pipeline_cost_factor": scenario.pipeline_cost_factor,
        "electrolyzer_capex_override": scenario.electrolyzer_capex_override,
        "truck_mode": scenario.truck_mode,
        "series": {
            "demand": "series/demand.csv",
            "electricity_price": "series/electricity_price.csv",
            "gas_price": "series/gas_price.csv",
        },
    })
    write_series_csv(bundle.root / "series" / "demand.csv", dict(scenario.demand_series))
    write_series_csv(bundle.root / "series" / "electricity_price.csv", dict(scenario.price_series))
    write_series_csv(bundle.root / "series" / "gas_price.csv", dict(scenario.gas_price_series))
    return bundle


# ---------------------------------------------------------------------------
# results


def _display(tech_id: str) -> str:
    return tech_id.replace("_", " ").title()


def capacity_summary(solution, network: Network, catalog: TechnologyCatalog,
                     scenario: Scenario) -> dict[str, float]:
    """Headline capacity metrics, one column per metric."""
    out: dict[str, float] = {}
    for tech in catalog.generation:
        units = sum(
            solution.values.get(("units", tech.id, z.id), 0.0) for z in network.zones)
        out[f"{_display(tech.id)} Capacity (tonne/hour)"] = units * tech.unit_capacity
    storage = sum(
        solution.values.get(("sto_cap", tech.id, z.id), 0.0)
        for tech in catalog.storage for z in network.zones)
    out["Storage Capacity (tonne)"] = storage
    trucks = 0.0
    for j in catalog.trucks:
        if scenario.truck_mode in ("relaxed", "integer"):
            trucks += solution.values.get(("trucks_total", j.id), 0.0) * j.cargo_capacity
        else:
            trucks += j.cargo_capacity * sum(
                solution.values.get(("route_fleet", p.from_zone, p.to_zone, j.id), 0.0)
                for p in network.paths)
    out["Truck Capacity (tonne)"] = trucks
    pipe_flow = 0.0
    for a, b in network.pairs():
        for pt in catalog.pipelines:
            pipe_flow += pt.max_flow * solution.values.get(("pipe_count", a, b, pt.id), 0.0)
    out["Pipeline Flow Capacity (tonne/hour)"] = pipe_flow
    return out


def generation_breakdown(solution, network: Network, catalog: TechnologyCatalog,
                         timegrid: TimeGrid) -> dict[str, float]:
    """Annual production in tonnes per generation technology."""
    out: dict[str, float] = {}
    for tech in catalog.generation:
        total = 0.0
        for z in network.zones:
            if tech.id in z.eligible_generation:
                total += sum(
                    timegrid.hours_weight(t) * solution.values[("gen", tech.id, z.id, t)]
                    for t in range(timegrid.n_steps))
        out[tech.id] = total
    return out


def save_results(out_dir, solution, report: AuditReport, network: Network,
                 catalog: TechnologyCatalog, timegrid: TimeGrid, scenario: Scenario,
                 instance=None) -> None:
    """Write capacity, cost, per-zone dispatch, audit JSON, and solution CSV."""
    from hsc_plan.solver import write_solution_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    caps = capacity_summary(solution, network, catalog, scenario)
    with open(out / "capacity.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(caps))
        writer.writerow([repr(v) for v in caps.values()])

    with open(out / "costs.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["term", "dollars_per_year"])
        for term in COST_TERMS:
            writer.writerow([term, repr(report.cost_breakdown[term])])
        writer.writerow(["total", repr(report.breakdown_total)])

    for z in network.zones:
        gens = [tech for tech in catalog.generation if tech.id in z.eligible_generation]
        stos = [tech for tech in catalog.storage if tech.id in z.eligible_storage]
        with open(out / f"dispatch_{z.id}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["timestep", "hours_weight", "demand", "lost", "net_import", "com_power",
                      "electricity_price", "gas_price"]
            header += [f"gen_{tech.id}" for tech in gens]
            header += [f"charge_{tech.id}" for tech in stos]
            header += [f"discharge_{tech.id}" for tech in stos]
            writer.writerow(header)
            for t in range(timegrid.n_steps):
                rec = [
                    t,
                    repr(timegrid.hours_weight(t)),
                    repr(scenario.demand_series[z.id][t]),
                    repr(solution.values[("lost", z.id, t)]),
                    repr(solution.values[("net_import", z.id, t)]),
                    repr(solution.values[("com_power", z.id, t)]),
                    repr(scenario.price_series[z.id][t]),
                    repr(scenario.gas_price_series[z.id][t]),
                ]
                rec += [repr(solution.values[("gen", tech.id, z.id, t)]) for tech in gens]
                rec += [repr(solution.values[("charge", tech.id, z.id, t)]) for tech in stos]
                rec += [repr(solution.values[("discharge", tech.id, z.id, t)]) for tech in stos]
                writer.writerow(rec)

    with open(out / "audit.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")

    write_solution_csv(solution, out / "solution.csv", instance)
