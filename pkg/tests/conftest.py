"""Shared fixtures: small instance factories and solved bundled cases."""

from __future__ import annotations

import dataclasses

import pytest

from hsc_plan.builder import build
from hsc_plan.caseio import load_case
from hsc_plan.data import case_path
from hsc_plan.model import (
    GenerationTech,
    Network,
    PipelineType,
    Scenario,
    StorageTech,
    TechnologyCatalog,
    TimeGrid,
    TruckType,
    Zone,
)
from hsc_plan.solver import solve_lp


def gen_smr(**kw):
    base = dict(id="smr", unit_capacity=9.2, unit_capex=161e6, lifetime_years=25,
                gas_rate=146.0, emission_rate=10.0)
    base.update(kw)
    return GenerationTech(**base)


def gen_smr_ccs(**kw):
    base = dict(id="smr_ccs", unit_capacity=9.2, unit_capex=296e6, lifetime_years=25,
                gas_rate=160.0, emission_rate=1.0)
    base.update(kw)
    return GenerationTech(**base)


def gen_electrolysis(**kw):
    base = dict(id="electrolysis", unit_capacity=0.06, unit_capex=3e6, lifetime_years=10,
                electricity_rate=53.0)
    base.update(kw)
    return GenerationTech(**base)


def tank(**kw):
    base = dict(id="gas_tank", capex_per_tonne=0.58e6, lifetime_years=12,
                compressor_capex=0.5, compressor_electricity=2.0)
    base.update(kw)
    return StorageTech(**base)


def gas_truck(**kw):
    base = dict(id="gas_truck", cargo_capacity=0.3, unit_capex=0.3e6, lifetime_years=12,
                opex_per_mile=1.5, boiloff_frac=0.03, station_capex=1.5,
                station_electricity=1.0)
    base.update(kw)
    return TruckType(**base)


def liquid_truck(**kw):
    base = dict(id="liquid_truck", cargo_capacity=4.0, unit_capex=0.8e6, lifetime_years=12,
                opex_per_mile=1.5, boiloff_frac=0.0, station_capex=32.0,
                station_electricity=11.0)
    base.update(kw)
    return TruckType(**base)


def pipe(**kw):
    base = dict(id="pipe8", max_flow=10.0, capex_per_mile=2.8e6, lifetime_years=40,
                linepack_per_mile=0.3, comp_capex_per_mile=700.0, comp_capex_fixed=0.75,
                comp_elec_per_mile=1.0, comp_elec_fixed=1.0)
    base.update(kw)
    return PipelineType(**base)


def flat(v: float, n: int) -> tuple[float, ...]:
    return tuple([float(v)] * n)


def make_case(
    *,
    n_steps: int = 6,
    step_hours: float = 1.0,
    n_periods: int = 1,
    zones=None,
    paths=(),
    generation=(),
    storage=(),
    trucks=(),
    pipelines=(),
    demand=None,
    elec_price=None,
    gas_price=None,
    **scenario_kw,
):
    """One-call toy case.  Series may be a scalar, a per-zone dict of
    scalars or sequences, or None (zeros / defaults)."""
    if zones is None:
        zones = [Zone(id="z1",
                      eligible_generation=frozenset(t.id for t in generation),
                      eligible_storage=frozenset(t.id for t in storage))]
    network = Network(zones=tuple(zones), paths=tuple(paths))
    catalog = TechnologyCatalog(generation=tuple(generation), storage=tuple(storage),
                                trucks=tuple(trucks), pipelines=tuple(pipelines))
    total = n_steps * n_periods
    timegrid = TimeGrid.uniform(n_periods, n_steps, step_hours)

    def series(spec, default):
        out = {}
        for z in network.zones:
            val = spec
            if isinstance(spec, dict):
                val = spec.get(z.id, default)
            if val is None:
                val = default
            if isinstance(val, (int, float)):
                out[z.id] = flat(val, total)
            else:
                assert len(val) == total, f"series for {z.id} has wrong length"
                out[z.id] = tuple(float(v) for v in val)
        return out

    scenario = Scenario(
        demand_series=series(demand, 0.0),
        price_series=series(elec_price, 30.0),
        gas_price_series=series(gas_price, 3.0),
        **scenario_kw,
    )
    return network, catalog, timegrid, scenario


@pytest.fixture(scope="session")
def mini_case():
    return load_case(case_path("northeast_mini"))


@pytest.fixture(scope="session")
def six_zone_case():
    return load_case(case_path("northeast6"))


@pytest.fixture(scope="session")
def mini_instance(mini_case):
    return build(*mini_case)


@pytest.fixture(scope="session")
def mini_solution(mini_instance):
    sol = solve_lp(mini_instance)
    assert sol.status == "optimal"
    return sol


@pytest.fixture(scope="session")
def mini_existing_case(mini_case):
    network, catalog, timegrid, scenario = mini_case
    return network, catalog, timegrid, dataclasses.replace(
        scenario, truck_mode="fixed_route_existing")


@pytest.fixture(scope="session")
def mini_existing_solution(mini_existing_case):
    sol = solve_lp(build(*mini_existing_case))
    assert sol.status == "optimal"
    return sol
