"""Translates a (network, catalog, timegrid, scenario) bundle into a sparse MILP.

The instance covers, per zone and timestep: hydrogen balance with lost
load, unit-committed production, stationary storage with cushion gas,
pipeline flows with linepack storage, and either a flexible truck
scheduling network (trucks shared across routes and zones, with travel
delays) or a fixed-route baseline with dedicated per-route fleets.

Conventions
-----------
* Representative periods are decoupled.  Every state recursion (units
  online, storage level, linepack, truck stocks) is cyclic within its
  period: the predecessor of the first step is the last step.  Rolling
  windows (minimum up/down time, travel delay) are truncated at period
  boundaries.
* Truck stocks use same-step event timing: a truck departing in step t is
  in transit during t, and a truck arriving in step t is at its
  destination during t.  Under this convention the two delay windows are
  exact: a load departing in step t can arrive no earlier than step
  t + delay.
* All operating quantities are rates (tonne/hour, MW).  Truck counts are
  converted to rates with the step length where they meet hydrogen or
  power balances.
* Objective unit is $/year: capital terms carry an annuity factor,
  rate-based operating terms carry hours-of-year weights, and event-based
  terms (truck arrivals, truck charges) carry occurrence-per-year weights.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

from hsc_plan.model import (
    GenerationTech,
    Network,
    Path,
    PipelineType,
    Scenario,
    StorageTech,
    TechnologyCatalog,
    TimeGrid,
    annuity_factor,
    validate_network,
)

INF = float("inf")


class BuildError(ValueError):
    """Raised when inputs cannot be turned into a well-formed instance."""


@dataclass
class Variable:
    key: tuple
    lb: float
    ub: float
    obj: float = 0.0
    integer: bool = False


@dataclass
class Row:
    key: tuple  # (family, *indices)
    coeffs: list[tuple[int, float]]  # (column index, value), no zeros
    sense: str  # 'E' | 'L' | 'G'
    rhs: float

    @property
    def family(self) -> str:
        return self.key[0]


# Index signature per variable kind, used to round-trip semantic keys
# through text formats (solution CSVs, MPS sidecar name maps).
VAR_KINDS: dict[str, tuple[str, ...]] = {
    "col": ("str",),  # generic columns (hand-built or foreign instances)
    "net_import": ("str", "int"),
    "lost": ("str", "int"),
    "com_power": ("str", "int"),
    "units": ("str", "str"),
    "units_on": ("str", "str", "int"),
    "units_up": ("str", "str", "int"),
    "units_down": ("str", "str", "int"),
    "gen": ("str", "str", "int"),
    "gas_use": ("str", "str", "int"),
    "sto_cap": ("str", "str"),
    "sto_rate": ("str", "str"),
    "charge": ("str", "str", "int"),
    "discharge": ("str", "str", "int"),
    "soc": ("str", "str", "int"),
    "pipe_count": ("str", "str", "str"),
    "pipe_to": ("str", "str", "str", "int"),
    "pipe_from": ("str", "str", "str", "int"),
    "linepack": ("str", "str", "str", "int"),
    "trucks_total": ("str",),
    "trucks_full": ("str", "int"),
    "trucks_empty": ("str", "int"),
    "station_cap": ("str", "str"),
    "transit_full": ("str", "str", "str", "int"),
    "transit_empty": ("str", "str", "str", "int"),
    "depart_full": ("str", "str", "str", "int"),
    "depart_empty": ("str", "str", "str", "int"),
    "arrive_full": ("str", "str", "str", "int"),
    "arrive_empty": ("str", "str", "str", "int"),
    "q_full": ("str", "str", "int"),
    "q_empty": ("str", "str", "int"),
    "q_cha": ("str", "str", "int"),
    "q_dis": ("str", "str", "int"),
    "route_fleet": ("str", "str", "str"),
    "route_flow": ("str", "str", "str", "int"),
}


def key_to_str(key: tuple) -> str:
    return ":".join(str(part) for part in key)


def str_to_key(text: str) -> tuple:
    parts = text.split(":")
    kind = parts[0]
    schema = VAR_KINDS.get(kind)
    if schema is None:
        raise ValueError(f"unknown variable kind in key {text!r}")
    if len(parts) - 1 != len(schema):
        raise ValueError(f"key {text!r} has {len(parts) - 1} indices, expected {len(schema)}")
    out: list = [kind]
    for spec, raw in zip(schema, parts[1:]):
        out.append(int(raw) if spec == "int" else raw)
    return tuple(out)


class VariableRegistry:
    """Ordered variable table with unique semantic keys."""

    def __init__(self) -> None:
        self._vars: list[Variable] = []
        self._index: dict[tuple, int] = {}

    def add(self, key: tuple, lb: float = 0.0, ub: float = INF,
            obj: float = 0.0, integer: bool = False) -> int:
        if key in self._index:
            raise BuildError(f"duplicate variable key {key}")
        if not lb <= ub:
            raise BuildError(f"variable {key}: lb {lb} > ub {ub}")
        idx = len(self._vars)
        self._vars.append(Variable(key=key, lb=lb, ub=ub, obj=obj, integer=integer))
        self._index[key] = idx
        return idx

    def index(self, key: tuple) -> int:
        return self._index[key]

    def get(self, key: tuple) -> Variable:
        return self._vars[self._index[key]]

    def __contains__(self, key: tuple) -> bool:
        return key in self._index

    def __len__(self) -> int:
        return len(self._vars)

    @property
    def variables(self) -> list[Variable]:
        return self._vars

    def keys(self) -> list[tuple]:
        return [v.key for v in self._vars]


@dataclass
class MilpInstance:
    """Sparse minimization instance plus its semantic variable registry."""

    registry: VariableRegistry
    rows: list[Row]
    metadata: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.registry)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def nnz(self) -> int:
        return sum(len(r.coeffs) for r in self.rows)

    def has_integers(self) -> bool:
        return any(v.integer for v in self.registry.variables)

    def row_count_by_family(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.family] = out.get(r.family, 0) + 1
        return out

    def to_arrays(self):
        """(c, A, senses, rhs, lb, ub, int_mask) with A in scipy CSC."""
        import numpy as np
        from scipy import sparse

        n = self.n_vars
        m = self.n_rows
        c = np.array([v.obj for v in self.registry.variables], dtype=float)
        lb = np.array([v.lb for v in self.registry.variables], dtype=float)
        ub = np.array([v.ub for v in self.registry.variables], dtype=float)
        int_mask = np.array([v.integer for v in self.registry.variables], dtype=bool)
        rhs = np.array([r.rhs for r in self.rows], dtype=float)
        senses = np.array([r.sense for r in self.rows])
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, val in row.coeffs:
                ri.append(i)
                ci.append(j)
                data.append(val)
        A = sparse.coo_matrix((data, (ri, ci)), shape=(m, n)).tocsc()
        return c, A, senses, rhs, lb, ub, int_mask


@dataclass
class BuildContext:
    """Everything the row emitters need, prepared once per build."""

    network: Network
    catalog: TechnologyCatalog
    timegrid: TimeGrid
    scenario: Scenario
    registry: VariableRegistry = field(default_factory=VariableRegistry)
    rows: list[Row] = field(default_factory=list)
    # derived tables
    gen_sites: list[tuple[GenerationTech, str]] = field(default_factory=list)
    sto_sites: list[tuple[StorageTech, str]] = field(default_factory=list)
    pipe_pairs: list[tuple[tuple[str, str], PipelineType, float]] = field(default_factory=list)
    delay_steps: dict[tuple[str, str], int] = field(default_factory=dict)
    caps: dict[str, float] = field(default_factory=dict)

    # -- time helpers --------------------------------------------------------
    @property
    def n_steps(self) -> int:
        return self.timegrid.n_steps

    @property
    def dt(self) -> float:
        return self.timegrid.step_hours

    def hours_weight(self, t: int) -> float:
        """Hours of the year represented by step t (rate-cost weight)."""
        return self.timegrid.hours_weight(t)

    def event_weight(self, t: int) -> float:
        """Occurrences per year of step t (event-cost weight)."""
        return self.timegrid.weights[t]

    def period_of(self, t: int) -> tuple[int, int]:
        for start, stop in self.timegrid.period_slices:
            if start <= t < stop:
                return start, stop
        raise IndexError(t)

    def prev_step(self, t: int) -> int:
        """Cyclic predecessor within the representative period."""
        start, stop = self.period_of(t)
        return stop - 1 if t == start else t - 1

    # -- emission helpers ----------------------------------------------------
    def var(self, key: tuple) -> int:
        return self.registry.index(key)

    def add_row(self, key: tuple, coeffs: Iterable[tuple[int, float]],
                sense: str, rhs: float) -> Row:
        acc: dict[int, float] = {}
        for idx, val in coeffs:
            if val != 0.0:
                acc[idx] = acc.get(idx, 0.0) + val
        merged = [(idx, val) for idx, val in acc.items() if val != 0.0]
        if not math.isfinite(rhs):
            raise BuildError(f"row {key}: non-finite rhs {rhs}")
        row = Row(key=key, coeffs=merged, sense=sense, rhs=rhs)
        self.rows.append(row)
        return row

    def annuity(self, lifetime_years: float) -> float:
        return annuity_factor(lifetime_years, self.scenario.discount_rate)

    def demand(self, zone_id: str, t: int) -> float:
        return self.scenario.demand_series[zone_id][t]


def _delay_steps(path: Path, dt: float) -> int:
    return max(1, math.ceil(path.travel_delay_hours / dt))


def _investment_caps(ctx: BuildContext) -> dict[str, float]:
    """Documented finite caps for structurally unbounded investments.

    Sized from the demand series so they never bind in a sane instance:
    generation/compression rates at 10x system peak, energy stocks and
    truck fleets at a full year of demand.
    """
    demand = ctx.scenario.demand_series
    peaks = [
        sum(demand[z.id][t] for z in ctx.network.zones)
        for t in range(ctx.n_steps)
    ]
    peak = max(peaks, default=0.0)
    annual = sum(
        ctx.hours_weight(t) * sum(demand[z.id][t] for z in ctx.network.zones)
        for t in range(ctx.n_steps)
    )
    return {
        "rate": 10.0 * peak + 10.0,  # tonne/hour style caps
        "stock": max(annual, 10.0),  # tonne style caps
    }


def prepare_context(network: Network, catalog: TechnologyCatalog,
                    timegrid: TimeGrid, scenario: Scenario) -> BuildContext:
    """Validate inputs, derive index tables, and register every variable."""
    diagnostics = validate_network(network, catalog, scenario, timegrid)
    if diagnostics:
        raise BuildError(
            "network validation failed:\n" + "\n".join(str(d) for d in diagnostics)
        )
    ctx = BuildContext(network=network, catalog=catalog, timegrid=timegrid, scenario=scenario)

    for z in network.zones:
        for tech in catalog.generation:
            if tech.id in z.eligible_generation:
                ctx.gen_sites.append((tech, z.id))
        for tech in catalog.storage:
            if tech.id in z.eligible_storage:
                ctx.sto_sites.append((tech, z.id))
    if catalog.pipelines:
        for pair in network.pairs():
            a, b = pair
            distance = network.path(a, b).distance_miles
            if abs(network.path(b, a).distance_miles - distance) > 1e-9:
                # a pipeline is one physical line per pair; it has no
                # meaningful length if the two directions disagree
                raise BuildError(f"pair {pair}: asymmetric distances with pipelines in catalog")
            for pt in catalog.pipelines:
                ctx.pipe_pairs.append((pair, pt, distance))

    min_period = min(timegrid.period_lengths)
    for p in network.paths:
        steps = _delay_steps(p, ctx.dt)
        if steps > min_period:
            raise BuildError(
                f"path {p.from_zone}->{p.to_zone}: travel delay of {steps} steps "
                f"exceeds the shortest period ({min_period} steps)"
            )
        ctx.delay_steps[p.key] = steps

    ctx.caps = _investment_caps(ctx)
    _register_variables(ctx)
    return ctx


def _register_variables(ctx: BuildContext) -> None:
    reg = ctx.registry
    sc = ctx.scenario
    cat = ctx.catalog
    rate_cap = ctx.caps["rate"]
    stock_cap = ctx.caps["stock"]
    carbon = sc.carbon_price
    as_integer = sc.truck_mode == "integer"

    # zone-level operating variables
    for z in ctx.network.zones:
        elec = sc.price_series[z.id]
        for t in range(ctx.n_steps):
            w = ctx.hours_weight(t)
            reg.add(("net_import", z.id, t), lb=-INF, ub=INF)
            reg.add(("lost", z.id, t), lb=0.0, ub=ctx.demand(z.id, t),
                    obj=w * sc.lost_load_cost)
            reg.add(("com_power", z.id, t), lb=0.0, obj=w * elec[t])

    # generation
    for tech, zid in ctx.gen_sites:
        capex = sc.generation_capex(tech)
        reg.add(("units", tech.id, zid),
                ub=rate_cap / (tech.unit_capacity * tech.max_output_frac),
                obj=ctx.annuity(tech.lifetime_years) * capex)
        elec = sc.price_series[zid]
        gas = sc.gas_price_series[zid]
        has_uc = tech.min_up_hours > 0 or tech.min_down_hours > 0
        for t in range(ctx.n_steps):
            w = ctx.hours_weight(t)
            reg.add(("gen", tech.id, zid, t),
                    obj=w * (elec[t] * tech.electricity_rate + carbon * tech.emission_rate))
            if tech.gas_rate > 0:
                reg.add(("gas_use", tech.id, zid, t), obj=w * gas[t])
            reg.add(("units_on", tech.id, zid, t))
            if has_uc:
                reg.add(("units_up", tech.id, zid, t))
                reg.add(("units_down", tech.id, zid, t))

    # storage
    for tech, zid in ctx.sto_sites:
        delta = ctx.annuity(tech.lifetime_years)
        reg.add(("sto_cap", tech.id, zid), ub=stock_cap, obj=delta * tech.capex_per_tonne)
        reg.add(("sto_rate", tech.id, zid), ub=rate_cap, obj=delta * tech.compressor_capex)
        for t in range(ctx.n_steps):
            reg.add(("charge", tech.id, zid, t))
            reg.add(("discharge", tech.id, zid, t))
            reg.add(("soc", tech.id, zid, t))

    # pipelines: one build variable per unordered pair, flows at both ends
    pcf = sc.pipeline_cost_factor
    for (a, b), pt, dist in ctx.pipe_pairs:
        delta = ctx.annuity(pt.lifetime_years)
        line_capex = pt.capex_per_mile * dist
        comp_capex = pt.comp_capex_per_mile * dist + pt.comp_capex_fixed
        reg.add(("pipe_count", a, b, pt.id),
                ub=rate_cap / pt.max_flow,
                obj=pcf * delta * (line_capex + comp_capex))
        for end, other in ((a, b), (b, a)):
            for t in range(ctx.n_steps):
                reg.add(("pipe_to", end, other, pt.id, t))
                reg.add(("pipe_from", end, other, pt.id, t))
        for t in range(ctx.n_steps):
            reg.add(("linepack", a, b, pt.id, t))

    # trucks
    if sc.truck_mode in ("relaxed", "integer"):
        for j in cat.trucks:
            delta = ctx.annuity(j.lifetime_years)
            reg.add(("trucks_total", j.id),
                    ub=max(stock_cap / j.cargo_capacity, 10.0),
                    obj=delta * j.unit_capex, integer=as_integer)
            for z in ctx.network.zones:
                reg.add(("station_cap", z.id, j.id), ub=rate_cap,
                        obj=delta * j.station_capex)
            for t in range(ctx.n_steps):
                reg.add(("trucks_full", j.id, t), integer=as_integer)
                reg.add(("trucks_empty", j.id, t), integer=as_integer)
            for p in ctx.network.paths:
                arrival_cost = (
                    j.opex_per_mile * p.distance_miles
                    + carbon * j.emission_rate * j.cargo_capacity * p.distance_miles
                )
                for t in range(ctx.n_steps):
                    ev = ctx.event_weight(t)
                    reg.add(("transit_full", p.from_zone, p.to_zone, j.id, t), integer=as_integer)
                    reg.add(("transit_empty", p.from_zone, p.to_zone, j.id, t), integer=as_integer)
                    reg.add(("depart_full", p.from_zone, p.to_zone, j.id, t), integer=as_integer)
                    reg.add(("depart_empty", p.from_zone, p.to_zone, j.id, t), integer=as_integer)
                    reg.add(("arrive_full", p.from_zone, p.to_zone, j.id, t),
                            obj=ev * arrival_cost, integer=as_integer)
                    reg.add(("arrive_empty", p.from_zone, p.to_zone, j.id, t),
                            obj=ev * arrival_cost, integer=as_integer)
            for z in ctx.network.zones:
                for t in range(ctx.n_steps):
                    reg.add(("q_full", z.id, j.id, t), integer=as_integer)
                    reg.add(("q_empty", z.id, j.id, t), integer=as_integer)
                    reg.add(("q_cha", z.id, j.id, t), integer=as_integer)
                    reg.add(("q_dis", z.id, j.id, t), integer=as_integer)
    else:  # fixed_route_existing
        for j in cat.trucks:
            delta = ctx.annuity(j.lifetime_years)
            for z in ctx.network.zones:
                reg.add(("station_cap", z.id, j.id), ub=rate_cap,
                        obj=delta * j.station_capex)
            for p in ctx.network.paths:
                reg.add(("route_fleet", p.from_zone, p.to_zone, j.id),
                        ub=max(stock_cap / j.cargo_capacity, 10.0),
                        obj=delta * j.unit_capex)
                # A dedicated shuttle pays for the loaded leg and the empty
                # return, so per-trip costs are doubled.
                per_tonne = (
                    2.0 * j.opex_per_mile * p.distance_miles / j.cargo_capacity
                    + 2.0 * carbon * j.emission_rate * p.distance_miles
                )
                for t in range(ctx.n_steps):
                    w = ctx.hours_weight(t)
                    reg.add(("route_flow", p.from_zone, p.to_zone, j.id, t),
                            obj=w * per_tonne)


# ---------------------------------------------------------------------------
# row emitters


def emit_balance(ctx: BuildContext) -> list[Row]:
    """Zonal hydrogen balance: production + net imports + storage discharge
    equal storage charge plus demand net of lost load."""
    out = []
    for z in ctx.network.zones:
        zid = z.id
        gens = [(tech, s) for tech, s in ctx.gen_sites if s == zid]
        stos = [(tech, s) for tech, s in ctx.sto_sites if s == zid]
        for t in range(ctx.n_steps):
            coeffs = [(ctx.var(("net_import", zid, t)), 1.0),
                      (ctx.var(("lost", zid, t)), 1.0)]
            for tech, _ in gens:
                coeffs.append((ctx.var(("gen", tech.id, zid, t)), 1.0))
            for tech, _ in stos:
                coeffs.append((ctx.var(("discharge", tech.id, zid, t)), 1.0))
                coeffs.append((ctx.var(("charge", tech.id, zid, t)), -1.0))
            out.append(ctx.add_row(("balance", zid, t), coeffs, "E", ctx.demand(zid, t)))
    return out


def emit_production(ctx: BuildContext) -> list[Row]:
    """Output bounds per online unit, online <= built, start/stop
    accounting, rolling minimum up/down windows, and fuel metering."""
    out = []
    dt = ctx.dt
    for tech, zid in ctx.gen_sites:
        cap = tech.unit_capacity
        n_units = ctx.var(("units", tech.id, zid))
        has_uc = tech.min_up_hours > 0 or tech.min_down_hours > 0
        up_steps = math.ceil(tech.min_up_hours / dt)
        down_steps = math.ceil(tech.min_down_hours / dt)
        for t in range(ctx.n_steps):
            gen = ctx.var(("gen", tech.id, zid, t))
            on = ctx.var(("units_on", tech.id, zid, t))
            out.append(ctx.add_row(
                ("gen_max", tech.id, zid, t),
                [(gen, 1.0), (on, -tech.max_output_frac * cap)], "L", 0.0))
            if tech.min_output_frac > 0:
                out.append(ctx.add_row(
                    ("gen_min", tech.id, zid, t),
                    [(gen, 1.0), (on, -tech.min_output_frac * cap)], "G", 0.0))
            out.append(ctx.add_row(
                ("units_link", tech.id, zid, t),
                [(on, 1.0), (n_units, -1.0)], "L", 0.0))
            if tech.gas_rate > 0:
                out.append(ctx.add_row(
                    ("gas_tie", tech.id, zid, t),
                    [(ctx.var(("gas_use", tech.id, zid, t)), 1.0), (gen, -tech.gas_rate)],
                    "E", 0.0))
            if has_uc:
                prev = ctx.var(("units_on", tech.id, zid, ctx.prev_step(t)))
                out.append(ctx.add_row(
                    ("commit_step", tech.id, zid, t),
                    [(on, 1.0), (prev, -1.0),
                     (ctx.var(("units_up", tech.id, zid, t)), -1.0),
                     (ctx.var(("units_down", tech.id, zid, t)), 1.0)],
                    "E", 0.0))
                start, _ = ctx.period_of(t)
                if tech.min_up_hours > 0:
                    coeffs = [(on, 1.0)]
                    for e in range(max(start, t - up_steps), t + 1):
                        coeffs.append((ctx.var(("units_up", tech.id, zid, e)), -1.0))
                    out.append(ctx.add_row(("min_up", tech.id, zid, t), coeffs, "G", 0.0))
                if tech.min_down_hours > 0:
                    coeffs = [(n_units, 1.0), (on, -1.0)]
                    for e in range(max(start, t - down_steps), t + 1):
                        coeffs.append((ctx.var(("units_down", tech.id, zid, e)), -1.0))
                    out.append(ctx.add_row(("min_down", tech.id, zid, t), coeffs, "G", 0.0))
    return out


def emit_storage(ctx: BuildContext) -> list[Row]:
    """Cyclic state-of-charge recursion with capacity and cushion-gas
    bounds, and charge rate capped by compressor capacity."""
    out = []
    dt = ctx.dt
    for tech, zid in ctx.sto_sites:
        v_cap = ctx.var(("sto_cap", tech.id, zid))
        h_cap = ctx.var(("sto_rate", tech.id, zid))
        eff = tech.charge_efficiency
        for t in range(ctx.n_steps):
            soc = ctx.var(("soc", tech.id, zid, t))
            prev = ctx.var(("soc", tech.id, zid, ctx.prev_step(t)))
            cha = ctx.var(("charge", tech.id, zid, t))
            dis = ctx.var(("discharge", tech.id, zid, t))
            out.append(ctx.add_row(
                ("soc_step", tech.id, zid, t),
                [(soc, 1.0), (prev, -1.0), (cha, -dt * eff), (dis, dt / eff)],
                "E", 0.0))
            out.append(ctx.add_row(
                ("soc_max", tech.id, zid, t), [(soc, 1.0), (v_cap, -1.0)], "L", 0.0))
            if tech.min_soc_frac > 0:
                out.append(ctx.add_row(
                    ("soc_min", tech.id, zid, t),
                    [(soc, 1.0), (v_cap, -tech.min_soc_frac)], "G", 0.0))
            out.append(ctx.add_row(
                ("charge_cap", tech.id, zid, t), [(cha, 1.0), (h_cap, -1.0)], "L", 0.0))
    return out


def emit_pipeline(ctx: BuildContext) -> list[Row]:
    """Directional flow caps per line and the linepack stock.

    Linepack is the cumulative net injection (negative sum of both end
    exchanges); it starts each period at zero, stays within the per-line
    storage window, and must return to zero at the period end.
    """
    out = []
    dt = ctx.dt
    for (a, b), pt, dist in ctx.pipe_pairs:
        count = ctx.var(("pipe_count", a, b, pt.id))
        line_store = pt.linepack_per_mile * dist
        for end, other in ((a, b), (b, a)):
            for t in range(ctx.n_steps):
                for kind in ("pipe_to", "pipe_from"):
                    out.append(ctx.add_row(
                        ("pipe_cap", end, other, pt.id, kind, t),
                        [(ctx.var((kind, end, other, pt.id, t)), 1.0),
                         (count, -pt.max_flow)],
                        "L", 0.0))
        for t in range(ctx.n_steps):
            lp = ctx.var(("linepack", a, b, pt.id, t))
            coeffs = [(lp, 1.0)]
            start, stop = ctx.period_of(t)
            if t != start:  # period start is anchored at zero stock
                coeffs.append((ctx.var(("linepack", a, b, pt.id, t - 1)), -1.0))
            for end, other in ((a, b), (b, a)):
                coeffs.append((ctx.var(("pipe_to", end, other, pt.id, t)), dt))
                coeffs.append((ctx.var(("pipe_from", end, other, pt.id, t)), -dt))
            out.append(ctx.add_row(("linepack_step", a, b, pt.id, t), coeffs, "E", 0.0))
            if line_store > 0:
                out.append(ctx.add_row(
                    ("linepack_max", a, b, pt.id, t),
                    [(lp, 1.0), (count, -line_store)], "L", 0.0))
                if pt.min_linepack_frac > 0:
                    out.append(ctx.add_row(
                        ("linepack_min", a, b, pt.id, t),
                        [(lp, 1.0), (count, -pt.min_linepack_frac * line_store)],
                        "G", 0.0))
            else:
                out.append(ctx.add_row(
                    ("linepack_max", a, b, pt.id, t), [(lp, 1.0)], "L", 0.0))
            if t == stop - 1:
                out.append(ctx.add_row(
                    ("linepack_close", a, b, pt.id, t), [(lp, 1.0)], "E", 0.0))
    return out


def emit_trucks(ctx: BuildContext) -> list[Row]:
    """Flexible truck scheduling: shared fleet identity, full/empty stock
    decomposition, zone and transit recursions, travel-delay windows, and
    station charging caps."""
    if ctx.scenario.truck_mode not in ("relaxed", "integer"):
        raise BuildError(f"emit_trucks requires relaxed/integer mode, got {ctx.scenario.truck_mode!r}")
    out = []
    for j in ctx.catalog.trucks:
        total = ctx.var(("trucks_total", j.id))
        for t in range(ctx.n_steps):
            vf = ctx.var(("trucks_full", j.id, t))
            ve = ctx.var(("trucks_empty", j.id, t))
            out.append(ctx.add_row(
                ("fleet", j.id, t), [(vf, 1.0), (ve, 1.0), (total, -1.0)], "E", 0.0))
            for state, vvar in (("full", vf), ("empty", ve)):
                coeffs = [(vvar, 1.0)]
                for p in ctx.network.paths:
                    coeffs.append((ctx.var((f"transit_{state}", p.from_zone, p.to_zone, j.id, t)), -1.0))
                for z in ctx.network.zones:
                    coeffs.append((ctx.var((f"q_{state}", z.id, j.id, t)), -1.0))
                out.append(ctx.add_row((f"fleet_split_{state}", j.id, t), coeffs, "E", 0.0))

        # zone inventories: charging swaps an empty truck to full the same
        # step; departures leave the zone immediately, arrivals join it on
        # their arrival step
        for z in ctx.network.zones:
            zid = z.id
            outgoing = ctx.network.paths_from(zid)
            incoming = ctx.network.paths_to(zid)
            for t in range(ctx.n_steps):
                prev = ctx.prev_step(t)
                cha = ctx.var(("q_cha", zid, j.id, t))
                dis = ctx.var(("q_dis", zid, j.id, t))
                for state, swap in (("full", -1.0), ("empty", 1.0)):
                    coeffs = [
                        (ctx.var((f"q_{state}", zid, j.id, t)), 1.0),
                        (ctx.var((f"q_{state}", zid, j.id, prev)), -1.0),
                        (cha, swap), (dis, -swap),
                    ]
                    for p in outgoing:
                        coeffs.append((ctx.var((f"depart_{state}", p.from_zone, p.to_zone, j.id, t)), 1.0))
                    for p in incoming:
                        coeffs.append((ctx.var((f"arrive_{state}", p.from_zone, p.to_zone, j.id, t)), -1.0))
                    out.append(ctx.add_row((f"inv_{state}", zid, j.id, t), coeffs, "E", 0.0))
                out.append(ctx.add_row(
                    ("station_cap", zid, j.id, t),
                    [(cha, j.cargo_capacity / ctx.dt),
                     (ctx.var(("station_cap", zid, j.id)), -1.0)],
                    "L", 0.0))

        # transit stocks and delay windows per directed path
        for p in ctx.network.paths:
            pk = (p.from_zone, p.to_zone)
            delay = ctx.delay_steps[pk]
            for state in ("full", "empty"):
                for t in range(ctx.n_steps):
                    u = ctx.var((f"transit_{state}", *pk, j.id, t))
                    u_prev = ctx.var((f"transit_{state}", *pk, j.id, ctx.prev_step(t)))
                    x = ctx.var((f"depart_{state}", *pk, j.id, t))
                    y = ctx.var((f"arrive_{state}", *pk, j.id, t))
                    out.append(ctx.add_row(
                        (f"transit_{state}", *pk, j.id, t),
                        [(u, 1.0), (u_prev, -1.0), (x, -1.0), (y, 1.0)], "E", 0.0))
                    start, stop = ctx.period_of(t)
                    coeffs = [(u, 1.0)]
                    for e in range(max(start, t - delay + 1), t + 1):
                        coeffs.append((ctx.var((f"depart_{state}", *pk, j.id, e)), -1.0))
                    out.append(ctx.add_row(
                        ("depart_window", state, *pk, j.id, t), coeffs, "G", 0.0))
                    if t + 1 < stop:
                        coeffs = [(u, 1.0)]
                        for e in range(t + 1, min(stop - 1, t + delay) + 1):
                            coeffs.append((ctx.var((f"arrive_{state}", *pk, j.id, e)), -1.0))
                        out.append(ctx.add_row(
                            ("arrive_window", state, *pk, j.id, t), coeffs, "G", 0.0))
    return out


def existing_mode_flow_cap(cargo_capacity: float, delay_steps: int, dt: float) -> float:
    """Sustained tonne/hour one truck dedicated to a route can carry.

    A dedicated shuttle is busy for the loaded leg plus the empty return,
    both at the grid-effective travel time, so the cap is
    cargo / max(1, 2 * delay).  This keeps the fixed-route baseline inside
    the flexible model's feasible set: any baseline plan is exactly a
    dedicated-shuttle schedule of the flexible model.
    """
    return cargo_capacity / max(1.0, 2.0 * delay_steps * dt)


def emit_existing_mode(ctx: BuildContext) -> list[Row]:
    """Fixed-route baseline: each route gets a dedicated fleet with a fixed
    flow capacity, no sharing across routes, and no parked storage.
    Deliveries lag charges by the travel delay, as they do for scheduled
    trucks."""
    if ctx.scenario.truck_mode != "fixed_route_existing":
        raise BuildError(f"emit_existing_mode requires fixed_route_existing, got {ctx.scenario.truck_mode!r}")
    out = []
    for j in ctx.catalog.trucks:
        for p in ctx.network.paths:
            pk = (p.from_zone, p.to_zone)
            fleet = ctx.var(("route_fleet", *pk, j.id))
            per_truck = existing_mode_flow_cap(j.cargo_capacity, ctx.delay_steps[pk], ctx.dt)
            for t in range(ctx.n_steps):
                out.append(ctx.add_row(
                    ("route_cap", *pk, j.id, t),
                    [(ctx.var(("route_flow", *pk, j.id, t)), 1.0), (fleet, -per_truck)],
                    "L", 0.0))
        for z in ctx.network.zones:
            outgoing = ctx.network.paths_from(z.id)
            for t in range(ctx.n_steps):
                coeffs = [(ctx.var(("route_flow", p.from_zone, p.to_zone, j.id, t)), 1.0)
                          for p in outgoing]
                coeffs.append((ctx.var(("station_cap", z.id, j.id)), -1.0))
                out.append(ctx.add_row(("station_cap", z.id, j.id, t), coeffs, "L", 0.0))
    return out


def _lagged_step(ctx: BuildContext, t: int, lag: int) -> int:
    """Step ``lag`` steps before ``t``, wrapping within the period."""
    start, stop = ctx.period_of(t)
    return start + (t - start - lag) % (stop - start)


def _truck_exchange_coeffs(ctx: BuildContext, zid: str, t: int) -> list[tuple[int, float]]:
    """Truck hydrogen exchange at a zone, as (column, tonnes-per-hour) terms."""
    coeffs = []
    if ctx.scenario.truck_mode in ("relaxed", "integer"):
        for j in ctx.catalog.trucks:
            rate = j.cargo_capacity / ctx.dt
            coeffs.append((ctx.var(("q_dis", zid, j.id, t)), (1.0 - j.boiloff_frac) * rate))
            coeffs.append((ctx.var(("q_cha", zid, j.id, t)), -rate))
    else:
        for j in ctx.catalog.trucks:
            for p in ctx.network.paths_to(zid):
                # deliveries lag the charge at the origin by the travel delay
                src = _lagged_step(ctx, t, ctx.delay_steps[p.key])
                coeffs.append((ctx.var(("route_flow", p.from_zone, p.to_zone, j.id, src)),
                               1.0 - j.boiloff_frac))
            for p in ctx.network.paths_from(zid):
                coeffs.append((ctx.var(("route_flow", p.from_zone, p.to_zone, j.id, t)), -1.0))
    return coeffs


def emit_transmission_balance(ctx: BuildContext) -> list[Row]:
    """Net imports equal pipeline exchange plus truck exchange at each zone."""
    out = []
    for z in ctx.network.zones:
        zid = z.id
        for t in range(ctx.n_steps):
            coeffs = [(ctx.var(("net_import", zid, t)), 1.0)]
            for (a, b), pt, _ in ctx.pipe_pairs:
                if zid in (a, b):
                    other = b if zid == a else a
                    coeffs.append((ctx.var(("pipe_to", zid, other, pt.id, t)), -1.0))
                    coeffs.append((ctx.var(("pipe_from", zid, other, pt.id, t)), 1.0))
            for idx, val in _truck_exchange_coeffs(ctx, zid, t):
                coeffs.append((idx, -val))
            out.append(ctx.add_row(("trans_balance", zid, t), coeffs, "E", 0.0))
    return out


def emit_compression_power(ctx: BuildContext) -> list[Row]:
    """Compressor electricity: pipeline boosting on both end exchanges,
    truck charging stations, and storage charging."""
    out = []
    for z in ctx.network.zones:
        zid = z.id
        for t in range(ctx.n_steps):
            coeffs = [(ctx.var(("com_power", zid, t)), 1.0)]
            for (a, b), pt, dist in ctx.pipe_pairs:
                if zid in (a, b):
                    other = b if zid == a else a
                    rate = pt.comp_elec_per_mile * dist + pt.comp_elec_fixed
                    coeffs.append((ctx.var(("pipe_to", zid, other, pt.id, t)), -rate))
                    coeffs.append((ctx.var(("pipe_from", zid, other, pt.id, t)), -rate))
            if ctx.scenario.truck_mode in ("relaxed", "integer"):
                for j in ctx.catalog.trucks:
                    coeffs.append((ctx.var(("q_cha", zid, j.id, t)),
                                   -j.station_electricity * j.cargo_capacity / ctx.dt))
            else:
                for j in ctx.catalog.trucks:
                    for p in ctx.network.paths_from(zid):
                        coeffs.append((ctx.var(("route_flow", p.from_zone, p.to_zone, j.id, t)),
                                       -j.station_electricity))
            for tech, site in ctx.sto_sites:
                if site == zid:
                    coeffs.append((ctx.var(("charge", tech.id, zid, t)),
                                   -tech.compressor_electricity))
            out.append(ctx.add_row(("com_power", zid, t), coeffs, "E", 0.0))
    return out


def _fingerprint(*objects) -> str:
    digest = hashlib.sha256()
    for obj in objects:
        digest.update(repr(obj).encode())
    return digest.hexdigest()[:16]


def build(network: Network, catalog: TechnologyCatalog,
          timegrid: TimeGrid, scenario: Scenario) -> MilpInstance:
    """Build the full minimization instance for one scenario."""
    ctx = prepare_context(network, catalog, timegrid, scenario)
    emit_balance(ctx)
    emit_production(ctx)
    emit_storage(ctx)
    emit_pipeline(ctx)
    if scenario.truck_mode in ("relaxed", "integer"):
        emit_trucks(ctx)
    else:
        emit_existing_mode(ctx)
    emit_transmission_balance(ctx)
    emit_compression_power(ctx)
    meta = {
        "fingerprint": _fingerprint(network, catalog, timegrid, scenario),
        "truck_mode": scenario.truck_mode,
        "n_steps": ctx.n_steps,
        "n_zones": len(network.zones),
    }
    return MilpInstance(registry=ctx.registry, rows=ctx.rows, metadata=meta)
