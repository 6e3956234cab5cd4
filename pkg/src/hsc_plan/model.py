"""Domain data model for hydrogen supply chain planning.

Everything the optimization needs to know about the physical system lives
here: the zonal network, the technology catalog (generation, storage,
trucks, pipelines), the representative-period time grid, and the scenario
(prices, demand, policy knobs).  All types are frozen dataclasses and are
safe to share across threads after construction.

Units used throughout:

* hydrogen quantities: tonne, rates in tonne/hour
* electricity: MWh (rates in MWh per tonne of H2 handled)
* natural gas: MMBtu
* money: dollars; capital costs are converted to $/year with
  :func:`annuity_factor`
* distances: miles; durations: hours
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

HOURS_PER_YEAR = 8760.0

TRUCK_MODES = ("relaxed", "integer", "fixed_route_existing")

# Identifiers end up inside variable-key strings and CSV columns, so keep
# them to a filename-safe alphabet.
_ID_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


def _check_id(kind: str, value: str) -> None:
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise ValueError(f"{kind} id {value!r} must match [A-Za-z0-9_.-]+")


def annuity_factor(lifetime_years: float, discount_rate: float) -> float:
    """Capital recovery factor: $/year of annualized cost per $ of capex.

    Returns ``r (1+r)^L / ((1+r)^L - 1)`` for a positive discount rate
    ``r`` and straight-line ``1/L`` in the zero-rate limit.
    """
    if lifetime_years < 1:
        raise ValueError(f"lifetime_years must be >= 1, got {lifetime_years}")
    if discount_rate < 0 or discount_rate >= 1:
        raise ValueError(f"discount_rate must be in [0, 1), got {discount_rate}")
    # expm1/log1p keep tiny rates from collapsing (1+r)^L - 1 to zero
    denom = math.expm1(lifetime_years * math.log1p(discount_rate))
    if denom == 0.0:
        return 1.0 / lifetime_years
    return discount_rate * (denom + 1.0) / denom


@dataclass(frozen=True)
class Zone:
    """A demand/supply zone.

    ``allow_central_smr`` records siting restrictions for natural-gas
    reformers in urbanized zones; it is cross-checked against
    ``eligible_generation`` by :func:`validate_network`.
    """

    id: str
    name: str = ""
    allow_central_smr: bool = True
    eligible_generation: frozenset[str] = field(default_factory=frozenset)
    eligible_storage: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        _check_id("zone", self.id)
        object.__setattr__(self, "eligible_generation", frozenset(self.eligible_generation))
        object.__setattr__(self, "eligible_storage", frozenset(self.eligible_storage))


@dataclass(frozen=True)
class Path:
    """A directed transport path between two zones.

    Networks must contain both directions of every connected pair; see
    :meth:`Network.__post_init__`.  ``travel_delay_hours`` is the minimum
    truck travel time; when omitted it defaults to the distance at an
    average 40 mph, rounded up to a whole hour.
    """

    from_zone: str
    to_zone: str
    distance_miles: float
    travel_delay_hours: int = 0  # 0 means "use the 40 mph default"

    def __post_init__(self) -> None:
        if self.from_zone == self.to_zone:
            raise ValueError(f"path endpoints must differ, got {self.from_zone!r} twice")
        if not self.distance_miles > 0:
            raise ValueError(f"path distance must be > 0, got {self.distance_miles}")
        if self.travel_delay_hours == 0:
            object.__setattr__(
                self, "travel_delay_hours", max(1, math.ceil(self.distance_miles / 40.0))
            )
        if self.travel_delay_hours < 1 or self.travel_delay_hours != int(self.travel_delay_hours):
            raise ValueError(f"travel_delay_hours must be a whole number >= 1, got {self.travel_delay_hours}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.from_zone, self.to_zone)

    @property
    def pair(self) -> tuple[str, str]:
        """Unordered endpoint pair in canonical (sorted) order."""
        a, b = self.from_zone, self.to_zone
        return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Network:
    zones: tuple[Zone, ...]
    paths: tuple[Path, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "paths", tuple(self.paths))

    # -- lookups -----------------------------------------------------------
    @property
    def zone_ids(self) -> tuple[str, ...]:
        return tuple(z.id for z in self.zones)

    def zone(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise KeyError(zone_id)

    def pairs(self) -> tuple[tuple[str, str], ...]:
        """Unordered connected pairs, in first-appearance order."""
        seen: dict[tuple[str, str], None] = {}
        for p in self.paths:
            seen.setdefault(p.pair, None)
        return tuple(seen)

    def path(self, from_zone: str, to_zone: str) -> Path:
        for p in self.paths:
            if p.from_zone == from_zone and p.to_zone == to_zone:
                return p
        raise KeyError((from_zone, to_zone))

    def paths_from(self, zone_id: str) -> tuple[Path, ...]:
        return tuple(p for p in self.paths if p.from_zone == zone_id)

    def paths_to(self, zone_id: str) -> tuple[Path, ...]:
        return tuple(p for p in self.paths if p.to_zone == zone_id)


@dataclass(frozen=True)
class TimeGrid:
    """Representative operating periods at fixed step resolution.

    ``period_lengths[p]`` is the number of steps in period ``p``; steps are
    numbered globally ``0 .. n_steps-1`` in period order.  ``weights[t]``
    is the annual scaling weight of step ``t``: step ``t`` stands for
    ``weights[t] * step_hours`` hours of the year, and the weights must
    reconstruct a full year.
    """

    period_lengths: tuple[int, ...]
    weights: tuple[float, ...]
    step_hours: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "period_lengths", tuple(int(n) for n in self.period_lengths))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.period_lengths or any(n < 1 for n in self.period_lengths):
            raise ValueError("period_lengths must be a non-empty list of positive step counts")
        if self.step_hours <= 0:
            raise ValueError(f"step_hours must be > 0, got {self.step_hours}")
        if len(self.weights) != self.n_steps:
            raise ValueError(
                f"need one weight per step: {len(self.weights)} weights for {self.n_steps} steps"
            )
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        covered = sum(self.weights) * self.step_hours
        if abs(covered - HOURS_PER_YEAR) > 1e-6:
            raise ValueError(
                f"weights must reconstruct one year: sum(w)*step_hours = {covered!r}, expected {HOURS_PER_YEAR}"
            )

    @classmethod
    def uniform(cls, n_periods: int, steps_per_period: int, step_hours: float = 1.0) -> "TimeGrid":
        """Equal-weight grid covering the year with identical periods."""
        total = n_periods * steps_per_period
        w = HOURS_PER_YEAR / (total * step_hours)
        return cls(
            period_lengths=tuple([steps_per_period] * n_periods),
            weights=tuple([w] * total),
            step_hours=step_hours,
        )

    @property
    def n_steps(self) -> int:
        return sum(self.period_lengths)

    @property
    def period_slices(self) -> tuple[tuple[int, int], ...]:
        """Half-open global index range (start, stop) of each period."""
        out = []
        start = 0
        for n in self.period_lengths:
            out.append((start, start + n))
            start += n
        return tuple(out)

    def hours_weight(self, t: int) -> float:
        """Hours of the year represented by step ``t``."""
        return self.weights[t] * self.step_hours


@dataclass(frozen=True)
class GenerationTech:
    """A hydrogen production unit type (reformer train, electrolyzer stack).

    ``unit_capex`` is the full installed cost of one unit of size
    ``unit_capacity``; units are built in continuous numbers.  Output per
    online unit is bounded by ``min_output_frac``/``max_output_frac`` of
    rated capacity, and cycling is limited by minimum up/down hours.
    """

    id: str
    unit_capacity: float  # tonne/hour per unit
    unit_capex: float  # $ per unit
    lifetime_years: float
    electricity_rate: float = 0.0  # MWh per tonne H2
    gas_rate: float = 0.0  # MMBtu per tonne H2
    emission_rate: float = 0.0  # tonne CO2 per tonne H2
    min_output_frac: float = 0.0
    max_output_frac: float = 1.0
    min_up_hours: int = 0
    min_down_hours: int = 0

    def __post_init__(self) -> None:
        _check_id("generation tech", self.id)
        if not self.unit_capacity > 0:
            raise ValueError(f"{self.id}: unit_capacity must be > 0")
        if min(self.unit_capex, self.electricity_rate, self.gas_rate, self.emission_rate) < 0:
            raise ValueError(f"{self.id}: cost and consumption rates must be >= 0")
        if not 0 <= self.min_output_frac <= self.max_output_frac:
            raise ValueError(f"{self.id}: need 0 <= min_output_frac <= max_output_frac")
        if not 0 < self.max_output_frac <= 1:
            raise ValueError(f"{self.id}: max_output_frac must be in (0, 1]")
        if self.lifetime_years < 1:
            raise ValueError(f"{self.id}: lifetime_years must be >= 1")
        if self.min_up_hours < 0 or self.min_down_hours < 0:
            raise ValueError(f"{self.id}: min up/down hours must be >= 0")

    @property
    def is_electrolyzer(self) -> bool:
        """Electricity-driven production with no fuel input."""
        return self.electricity_rate > 0 and self.gas_rate == 0


@dataclass(frozen=True)
class StorageTech:
    """Stationary hydrogen storage plus its charging compressor."""

    id: str
    capex_per_tonne: float  # $ per tonne of capacity
    lifetime_years: float
    charge_efficiency: float = 1.0
    min_soc_frac: float = 0.0  # cushion gas fraction of capacity
    compressor_capex: float = 0.0  # $ per (tonne/hour) of charge rate
    compressor_electricity: float = 0.0  # MWh per tonne charged

    def __post_init__(self) -> None:
        _check_id("storage tech", self.id)
        if not 0 < self.charge_efficiency <= 1:
            raise ValueError(f"{self.id}: charge_efficiency must be in (0, 1]")
        if not 0 <= self.min_soc_frac < 1:
            raise ValueError(f"{self.id}: min_soc_frac must be in [0, 1)")
        if min(self.capex_per_tonne, self.compressor_capex, self.compressor_electricity) < 0:
            raise ValueError(f"{self.id}: costs must be >= 0")
        if self.lifetime_years < 1:
            raise ValueError(f"{self.id}: lifetime_years must be >= 1")


@dataclass(frozen=True)
class TruckType:
    """A truck technology (gaseous tube trailer or cryogenic liquid trailer).

    ``boiloff_frac`` is the hydrogen fraction lost between charging and
    discharging a load.  ``station_capex``/``station_electricity`` describe
    the compression or liquefaction stations that fill the trucks.
    """

    id: str
    cargo_capacity: float  # tonne per truck load
    unit_capex: float  # $ per truck
    lifetime_years: float
    opex_per_mile: float = 0.0  # $ per mile travelled (per arriving truck)
    boiloff_frac: float = 0.0
    emission_rate: float = 0.0  # tonne CO2 per (tonne H2 * mile)
    station_capex: float = 0.0  # $ per (tonne/hour) of charging capacity
    station_electricity: float = 0.0  # MWh per tonne charged

    def __post_init__(self) -> None:
        _check_id("truck type", self.id)
        if not self.cargo_capacity > 0:
            raise ValueError(f"{self.id}: cargo_capacity must be > 0")
        if not 0 <= self.boiloff_frac < 1:
            raise ValueError(f"{self.id}: boiloff_frac must be in [0, 1)")
        if min(self.unit_capex, self.opex_per_mile, self.emission_rate, self.station_capex,
               self.station_electricity) < 0:
            raise ValueError(f"{self.id}: costs must be >= 0")
        if self.lifetime_years < 1:
            raise ValueError(f"{self.id}: lifetime_years must be >= 1")


@dataclass(frozen=True)
class PipelineType:
    """A pipeline build option of fixed diameter.

    Lines are built in continuous multiples per connected zone pair.  A
    line stores ``linepack_per_mile * distance`` tonnes of hydrogen through
    pressure swings, of which ``min_linepack_frac`` must stay in the line.
    Compressor cost and electricity have a per-mile part and a fixed part.
    """

    id: str
    max_flow: float  # tonne/hour per line, each direction
    capex_per_mile: float  # $ per mile per line
    lifetime_years: float
    linepack_per_mile: float = 0.0  # tonne per mile per line
    min_linepack_frac: float = 0.0
    comp_capex_per_mile: float = 0.0  # $ per mile per line
    comp_capex_fixed: float = 0.0  # $ per line
    comp_elec_per_mile: float = 0.0  # MWh per tonne moved per mile
    comp_elec_fixed: float = 0.0  # MWh per tonne moved

    def __post_init__(self) -> None:
        _check_id("pipeline type", self.id)
        if not self.max_flow > 0:
            raise ValueError(f"{self.id}: max_flow must be > 0")
        if not 0 <= self.min_linepack_frac < 1:
            raise ValueError(f"{self.id}: min_linepack_frac must be in [0, 1)")
        if min(self.capex_per_mile, self.linepack_per_mile, self.comp_capex_per_mile,
               self.comp_capex_fixed, self.comp_elec_per_mile, self.comp_elec_fixed) < 0:
            raise ValueError(f"{self.id}: costs must be >= 0")
        if self.lifetime_years < 1:
            raise ValueError(f"{self.id}: lifetime_years must be >= 1")


@dataclass(frozen=True)
class TechnologyCatalog:
    generation: tuple[GenerationTech, ...] = ()
    storage: tuple[StorageTech, ...] = ()
    trucks: tuple[TruckType, ...] = ()
    pipelines: tuple[PipelineType, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "generation", tuple(self.generation))
        object.__setattr__(self, "storage", tuple(self.storage))
        object.__setattr__(self, "trucks", tuple(self.trucks))
        object.__setattr__(self, "pipelines", tuple(self.pipelines))
        ids = [t.id for group in (self.generation, self.storage, self.trucks, self.pipelines)
               for t in group]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise ValueError(f"duplicate technology ids in catalog: {sorted(dupes)}")

    def generation_ids(self) -> frozenset[str]:
        return frozenset(t.id for t in self.generation)

    def storage_ids(self) -> frozenset[str]:
        return frozenset(t.id for t in self.storage)

    def generation_tech(self, tech_id: str) -> GenerationTech:
        for t in self.generation:
            if t.id == tech_id:
                return t
        raise KeyError(tech_id)

    def storage_tech(self, tech_id: str) -> StorageTech:
        for t in self.storage:
            if t.id == tech_id:
                return t
        raise KeyError(tech_id)


def _freeze_series(series: Mapping[str, Iterable[float]]) -> Mapping[str, tuple[float, ...]]:
    return MappingProxyType({z: tuple(float(v) for v in vals) for z, vals in series.items()})


@dataclass(frozen=True)
class Scenario:
    """Exogenous inputs and policy knobs for one planning run.

    Series map zone id to a per-timestep sequence aligned with the
    :class:`TimeGrid`.  ``pipeline_cost_factor`` scales pipeline and
    pipeline-compressor capital cost (retrofit studies);
    ``electrolyzer_capex_override`` replaces the unit capex of every
    electrolysis technology in the catalog.
    """

    demand_series: Mapping[str, tuple[float, ...]]  # tonne/hour
    price_series: Mapping[str, tuple[float, ...]]  # $/MWh electricity
    gas_price_series: Mapping[str, tuple[float, ...]]  # $/MMBtu
    carbon_price: float = 0.0  # $/tonne CO2
    lost_load_cost: float = 1e7  # $/tonne unserved H2
    discount_rate: float = 0.07
    pipeline_cost_factor: float = 1.0
    electrolyzer_capex_override: float | None = None
    truck_mode: str = "relaxed"

    def __post_init__(self) -> None:
        if self.truck_mode not in TRUCK_MODES:
            raise ValueError(f"truck_mode must be one of {TRUCK_MODES}, got {self.truck_mode!r}")
        if self.carbon_price < 0:
            raise ValueError("carbon_price must be >= 0")
        if self.lost_load_cost <= 0:
            raise ValueError("lost_load_cost must be > 0")
        if not 0 <= self.discount_rate < 1:
            raise ValueError("discount_rate must be in [0, 1)")
        if self.pipeline_cost_factor < 0:
            raise ValueError("pipeline_cost_factor must be >= 0")
        if self.electrolyzer_capex_override is not None and self.electrolyzer_capex_override < 0:
            raise ValueError("electrolyzer_capex_override must be >= 0")
        object.__setattr__(self, "demand_series", _freeze_series(self.demand_series))
        object.__setattr__(self, "price_series", _freeze_series(self.price_series))
        object.__setattr__(self, "gas_price_series", _freeze_series(self.gas_price_series))

    def generation_capex(self, tech: GenerationTech) -> float:
        """Unit capex after any electrolyzer override."""
        if tech.is_electrolyzer and self.electrolyzer_capex_override is not None:
            return self.electrolyzer_capex_override
        return tech.unit_capex


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding.  ``code`` is stable; ``message`` is for humans."""

    code: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"[{self.code}] {self.message}"


def _marginal_production_cost(
    tech: GenerationTech, scenario: Scenario, zone_id: str
) -> float:
    """Worst-hour variable cost of one tonne from ``tech`` at ``zone_id``."""
    elec = max(scenario.price_series.get(zone_id, (0.0,)), default=0.0)
    gas = max(scenario.gas_price_series.get(zone_id, (0.0,)), default=0.0)
    return (
        tech.electricity_rate * elec
        + tech.gas_rate * gas
        + tech.emission_rate * scenario.carbon_price
    )


def validate_network(
    network: Network,
    catalog: TechnologyCatalog,
    scenario: Scenario,
    timegrid: TimeGrid | None = None,
) -> list[Diagnostic]:
    """Cross-object consistency checks.  Returns an empty list when valid.

    Per-type invariants are enforced at construction; this verifies the
    relationships between objects: unique ids, symmetric path coverage,
    eligibility sets referring to catalog entries, series covering every
    zone and timestep, a lost-load penalty above any marginal production
    cost, and every demand zone either hosting eligible generation or
    being reachable from a zone that does.
    """
    out: list[Diagnostic] = []
    zone_ids = [z.id for z in network.zones]
    dupes = {z for z in zone_ids if zone_ids.count(z) > 1}
    if dupes:
        out.append(Diagnostic("duplicate-zone-id", f"duplicate zone ids: {sorted(dupes)}"))
    zone_set = set(zone_ids)

    gen_ids = catalog.generation_ids()
    sto_ids = catalog.storage_ids()
    for z in network.zones:
        for g in sorted(z.eligible_generation - gen_ids):
            out.append(Diagnostic("unknown-generation-tech", f"zone {z.id}: unknown generation tech {g!r}"))
        for s in sorted(z.eligible_storage - sto_ids):
            out.append(Diagnostic("unknown-storage-tech", f"zone {z.id}: unknown storage tech {s!r}"))
        if not z.allow_central_smr:
            gas_fired = sorted(
                g for g in z.eligible_generation
                if g in gen_ids and catalog.generation_tech(g).gas_rate > 0
            )
            if gas_fired:
                out.append(Diagnostic(
                    "smr-not-allowed",
                    f"zone {z.id} disallows central SMR but lists gas-fired tech {gas_fired}",
                ))

    directed = set()
    for p in network.paths:
        if p.from_zone not in zone_set or p.to_zone not in zone_set:
            out.append(Diagnostic("unknown-path-zone", f"path {p.from_zone}->{p.to_zone} references unknown zone"))
            continue
        if p.key in directed:
            out.append(Diagnostic("duplicate-path", f"path {p.from_zone}->{p.to_zone} listed twice"))
        directed.add(p.key)
    for (a, b) in sorted(directed):
        if (b, a) not in directed:
            out.append(Diagnostic("one-way-path", f"path {a}->{b} has no reverse direction"))

    n_steps = timegrid.n_steps if timegrid is not None else None
    for name, series in (
        ("demand", scenario.demand_series),
        ("electricity-price", scenario.price_series),
        ("gas-price", scenario.gas_price_series),
    ):
        for z in zone_ids:
            if z not in series:
                out.append(Diagnostic("missing-series", f"{name} series missing for zone {z}"))
            elif n_steps is not None and len(series[z]) != n_steps:
                out.append(Diagnostic(
                    "series-length",
                    f"{name} series for zone {z} has {len(series[z])} steps, grid has {n_steps}",
                ))

    worst_marginal = 0.0
    for z in network.zones:
        for g in sorted(z.eligible_generation & gen_ids):
            tech = catalog.generation_tech(g)
            worst_marginal = max(worst_marginal, _marginal_production_cost(tech, scenario, z.id))
    if worst_marginal > 0 and scenario.lost_load_cost <= worst_marginal:
        out.append(Diagnostic(
            "lost-load-too-cheap",
            f"lost_load_cost {scenario.lost_load_cost} does not exceed the worst marginal "
            f"production cost {worst_marginal:.6g} $/tonne",
        ))

    # Reachability: zones with demand must host eligible generation or be
    # connected (over any number of hops) to a zone that does.
    producing = {
        z.id for z in network.zones if z.eligible_generation & gen_ids
    }
    adjacency: dict[str, set[str]] = {z: set() for z in zone_ids}
    for p in network.paths:
        if p.from_zone in adjacency and p.to_zone in adjacency:
            adjacency[p.from_zone].add(p.to_zone)
    reachable = set(producing)
    frontier = list(producing)
    while frontier:
        here = frontier.pop()
        for nxt in adjacency[here]:
            if nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    # A path from a producer *to* the demand zone is what matters, so walk
    # forward edges from producers.
    for z in network.zones:
        demand = scenario.demand_series.get(z.id, ())
        if any(d > 0 for d in demand) and z.id not in reachable:
            out.append(Diagnostic(
                "unreachable-demand",
                f"zone {z.id} has demand but no eligible generation and no inbound transport path",
            ))

    return out
