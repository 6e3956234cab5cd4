"""Domain type invariants, the annuity factor, and network validation."""

import pytest
from hypothesis import given, strategies as st

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
from conftest import flat, gen_electrolysis, gen_smr, make_case, tank


class TestAnnuity:
    def test_zero_rate_is_straight_line(self):
        assert annuity_factor(10, 0.0) == pytest.approx(0.1, abs=0)

    def test_single_year(self):
        assert annuity_factor(1, 0.07) == pytest.approx(1.07, rel=1e-12)

    def test_25y_at_7pct(self):
        # frozen from a 50-digit arbitrary-precision evaluation of
        # r (1+r)^L / ((1+r)^L - 1)
        assert annuity_factor(25, 0.07) == pytest.approx(0.08581051722066562, rel=1e-12)

    @pytest.mark.parametrize("lifetime,rate", [(0, 0.07), (-3, 0.0), (10, -0.01), (10, 1.0)])
    def test_domain_errors(self, lifetime, rate):
        with pytest.raises(ValueError):
            annuity_factor(lifetime, rate)

    @given(st.integers(min_value=1, max_value=60),
           st.floats(min_value=0.0, max_value=0.5, allow_nan=False))
    def test_bounds(self, lifetime, rate):
        a = annuity_factor(lifetime, rate)
        # repaying faster than interest-only and no slower than in one year
        assert a >= rate - 1e-12
        assert a >= 1.0 / lifetime - 1e-12
        assert a <= 1.0 + rate + 1e-12

    @given(st.integers(min_value=1, max_value=59),
           st.floats(min_value=0.0, max_value=0.5, allow_nan=False))
    def test_longer_life_is_cheaper_per_year(self, lifetime, rate):
        assert annuity_factor(lifetime + 1, rate) <= annuity_factor(lifetime, rate) + 1e-12


class TestTypes:
    def test_path_default_delay_is_40mph_rounded_up(self):
        assert Path("a", "b", distance_miles=317.0).travel_delay_hours == 8
        assert Path("a", "b", distance_miles=99.0).travel_delay_hours == 3
        assert Path("a", "b", distance_miles=10.0).travel_delay_hours == 1

    def test_path_invariants(self):
        with pytest.raises(ValueError):
            Path("a", "a", distance_miles=10.0)
        with pytest.raises(ValueError):
            Path("a", "b", distance_miles=0.0)

    def test_zone_id_charset(self):
        with pytest.raises(ValueError):
            Zone(id="bad zone")
        with pytest.raises(ValueError):
            Zone(id="a:b")

    def test_timegrid_must_cover_year(self):
        TimeGrid(period_lengths=(4,), weights=flat(8760 / 4, 4), step_hours=1.0)
        with pytest.raises(ValueError):
            TimeGrid(period_lengths=(4,), weights=flat(1.0, 4), step_hours=1.0)

    def test_timegrid_uniform_and_slices(self):
        tg = TimeGrid.uniform(2, 3, step_hours=2.0)
        assert tg.n_steps == 6
        assert tg.period_slices == ((0, 3), (3, 6))
        assert sum(tg.hours_weight(t) for t in range(6)) == pytest.approx(8760.0)

    def test_generation_invariants(self):
        with pytest.raises(ValueError):
            gen_smr(min_output_frac=0.9, max_output_frac=0.5)
        with pytest.raises(ValueError):
            gen_smr(unit_capacity=0.0)
        with pytest.raises(ValueError):
            gen_smr(lifetime_years=0)

    def test_storage_invariants(self):
        with pytest.raises(ValueError):
            tank(min_soc_frac=1.0)
        with pytest.raises(ValueError):
            tank(charge_efficiency=0.0)

    def test_truck_and_pipe_invariants(self):
        with pytest.raises(ValueError):
            TruckType(id="t", cargo_capacity=0.0, unit_capex=1.0, lifetime_years=10)
        with pytest.raises(ValueError):
            PipelineType(id="p", max_flow=0.0, capex_per_mile=1.0, lifetime_years=10)

    def test_catalog_rejects_duplicate_ids(self):
        with pytest.raises(ValueError):
            TechnologyCatalog(generation=(gen_smr(), gen_smr()))

    def test_scenario_validation_and_freeze(self):
        sc = Scenario(demand_series={"z1": (1.0,)}, price_series={"z1": (30.0,)},
                      gas_price_series={"z1": (3.0,)})
        with pytest.raises(TypeError):
            sc.demand_series["z1"] = (2.0,)
        with pytest.raises(ValueError):
            Scenario(demand_series={}, price_series={}, gas_price_series={},
                     truck_mode="warp")

    def test_electrolyzer_capex_override(self):
        sc = Scenario(demand_series={}, price_series={}, gas_price_series={},
                      electrolyzer_capex_override=9.5e5)
        assert sc.generation_capex(gen_electrolysis()) == 9.5e5
        assert sc.generation_capex(gen_smr()) == 161e6

    def test_electrolyzer_flag(self):
        assert gen_electrolysis().is_electrolyzer
        assert not gen_smr().is_electrolyzer


class TestValidateNetwork:
    def test_single_zone_smr_ok(self):
        net, cat, tg, sc = make_case(generation=[gen_smr()], demand=5.0)
        assert validate_network(net, cat, sc, tg) == []

    def test_unreachable_demand(self):
        zones = [Zone(id="a", eligible_generation=frozenset({"smr"})),
                 Zone(id="b")]
        net, cat, tg, sc = make_case(zones=zones, generation=[gen_smr()],
                                     demand={"a": 0.0, "b": 5.0})
        codes = [d.code for d in validate_network(net, cat, sc, tg)]
        assert "unreachable-demand" in codes

    def test_six_zone_bundle_validates(self, six_zone_case):
        network, catalog, timegrid, scenario = six_zone_case
        assert validate_network(network, catalog, scenario, timegrid) == []

    def test_one_way_path_flagged(self):
        zones = [Zone(id="a", eligible_generation=frozenset({"smr"})), Zone(id="b")]
        net, cat, tg, sc = make_case(
            zones=zones, paths=[Path("a", "b", 50.0)], generation=[gen_smr()])
        codes = [d.code for d in validate_network(net, cat, sc, tg)]
        assert "one-way-path" in codes

    def test_smr_in_urban_zone_flagged(self):
        zones = [Zone(id="a", allow_central_smr=False,
                      eligible_generation=frozenset({"smr"}))]
        net, cat, tg, sc = make_case(zones=zones, generation=[gen_smr()])
        codes = [d.code for d in validate_network(net, cat, sc, tg)]
        assert "smr-not-allowed" in codes

    def test_unknown_tech_and_missing_series(self):
        zones = [Zone(id="a", eligible_generation=frozenset({"mystery"}))]
        net, cat, tg, _ = make_case(zones=zones)
        sc = Scenario(demand_series={}, price_series={}, gas_price_series={})
        codes = [d.code for d in validate_network(net, cat, sc, tg)]
        assert "unknown-generation-tech" in codes
        assert "missing-series" in codes

    def test_lost_load_must_beat_marginal_cost(self):
        net, cat, tg, sc = make_case(generation=[gen_smr()], demand=5.0,
                                     gas_price=1e5, lost_load_cost=1e3)
        codes = [d.code for d in validate_network(net, cat, sc, tg)]
        assert "lost-load-too-cheap" in codes
