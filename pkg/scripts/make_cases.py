"""Regenerate the bundled example cases under src/hsc_plan/data/.

Technology parameters and the six-zone network (distances, average
demands, SMR siting restrictions) come from the published dataset.  The
hourly refuelling profile and zonal electricity prices are synthetic
stand-ins with a documented closed-form shape: the published profiles are
shown only as figures.  Everything here is deterministic; rerunning the
script reproduces the committed files byte for byte.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

import yaml

from hsc_plan.caseio import write_series_csv

DATA = REPO / "src" / "hsc_plan" / "data"

# LDV + HDV average demand, tonne/hour, zones 1..6
AVG_DEMAND = {1: 25 + 6, 2: 159 + 33, 3: 57 + 12, 4: 123 + 21, 5: 39 + 9, 6: 55 + 46}

# inter-zone distances, miles (symmetric)
DISTANCES = {
    (1, 2): 317, (1, 3): 504, (1, 4): 602, (1, 5): 487, (1, 6): 608,
    (2, 3): 199, (2, 4): 297, (2, 5): 179, (2, 6): 340,
    (3, 4): 99, (3, 5): 158, (3, 6): 333,
    (4, 5): 216, (4, 6): 358,
    (5, 6): 186,
}

URBAN_NO_SMR = (2, 4)  # central reformers not allowed there

GENERATION = [
    dict(id="electrolysis", unit_capacity=0.06, unit_capex=3.0e6, lifetime_years=10,
         electricity_rate=53.0, gas_rate=0.0, emission_rate=0.0),
    dict(id="smr", unit_capacity=9.2, unit_capex=161.0e6, lifetime_years=25,
         electricity_rate=0.0, gas_rate=146.0, emission_rate=10.0),
    dict(id="smr_ccs", unit_capacity=9.2, unit_capex=296.0e6, lifetime_years=25,
         electricity_rate=0.0, gas_rate=160.0, emission_rate=1.0),
]

STORAGE = [
    dict(id="gas_tank", capex_per_tonne=0.58e6, lifetime_years=12,
         charge_efficiency=1.0, min_soc_frac=0.0,
         compressor_capex=0.5, compressor_electricity=2.0),
]

TRUCKS = {
    "gas_truck": dict(id="gas_truck", cargo_capacity=0.3, unit_capex=0.3e6,
                      lifetime_years=12, opex_per_mile=1.5, boiloff_frac=0.03,
                      station_capex=1.5, station_electricity=1.0),
    "liquid_truck": dict(id="liquid_truck", cargo_capacity=4.0, unit_capex=0.8e6,
                         lifetime_years=12, opex_per_mile=1.5, boiloff_frac=0.0,
                         station_capex=32.0, station_electricity=11.0),
}

# max_flow is not in the published tables; 10 t/h matches an 8-inch line
# at roughly 10 m/s and 100 bar.
PIPELINES = [
    dict(id="pipe8", max_flow=10.0, capex_per_mile=2.8e6, lifetime_years=40,
         linepack_per_mile=0.3, min_linepack_frac=0.0,
         comp_capex_per_mile=700.0, comp_capex_fixed=0.75,
         comp_elec_per_mile=1.0, comp_elec_fixed=1.0),
]

GAS_PRICE = 3.0  # $/MMBtu, flat


def refuel_profile_hourly() -> list[float]:
    """Morning and evening refuelling peaks, weekends 10% quieter, mean 1."""
    out = []
    for h in range(168):
        hod = h % 24
        day = h // 24
        v = (0.60
             + 0.50 * math.exp(-((hod - 8.5) / 2.2) ** 2)
             + 0.70 * math.exp(-((hod - 17.5) / 2.8) ** 2))
        if day >= 5:
            v *= 0.9
        out.append(v)
    mean = sum(out) / len(out)
    return [v / mean for v in out]


def price_hourly(zone_idx: int) -> list[float]:
    """Synthetic zonal electricity price, $/MWh.

    Evening peaks, a midday dip standing in for solar, and a slow
    multi-day swing standing in for wind, phase-shifted per zone so zones
    disagree about which hours are cheap.
    """
    phase = 0.9 * zone_idx
    out = []
    for h in range(168):
        v = (30.0
             + 18.0 * math.sin(2 * math.pi * (h - 15) / 24 + phase)
             + 10.0 * math.sin(2 * math.pi * h / 168 + 2 * phase)
             + 6.0 * math.sin(2 * math.pi * h / 56 + 3 * phase)
             - 14.0 * max(0.0, math.sin(2 * math.pi * (h - 11) / 24)))
        out.append(round(max(2.0, v), 4))
    return out


def block_average(series: list[float], block: int) -> list[float]:
    assert len(series) % block == 0
    return [sum(series[i:i + block]) / block for i in range(0, len(series), block)]


def dump_yaml(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=False)


def zone_record(idx: int, gen_ids: list[str]) -> dict:
    return {
        "id": f"z{idx}",
        "name": f"Zone {idx}",
        "allow_central_smr": idx not in URBAN_NO_SMR,
        "eligible_generation": gen_ids,
        "eligible_storage": ["gas_tank"],
    }


def make_mini() -> None:
    """Two zones, one week at 8-hour steps, gas trucks only.

    Zones 3 and 4: the shortest published corridor (99 miles), with the
    urbanized zone 4 importing because reformers cannot be sited there.
    """
    root = DATA / "northeast_mini"
    step = 8
    steps = 168 // step
    zones = [zone_record(3, ["electrolysis", "smr", "smr_ccs"]),
             zone_record(4, ["electrolysis"])]
    dump_yaml(root / "network.yaml", {
        "zones": zones,
        "mirror_paths": True,
        "paths": [{"from": "z3", "to": "z4", "distance_miles": float(DISTANCES[(3, 4)])}],
    })
    dump_yaml(root / "catalog.yaml", {
        "generation": GENERATION,
        "storage": STORAGE,
        "trucks": [TRUCKS["gas_truck"]],
        "pipelines": [],
    })
    dump_yaml(root / "timegrid.yaml", {
        "step_hours": float(step),
        "periods": [{"steps": steps}],
    })
    dump_yaml(root / "scenario.yaml", {
        "carbon_price": 100.0,
        "lost_load_cost": 1.0e7,
        "discount_rate": 0.07,
        "pipeline_cost_factor": 1.0,
        "truck_mode": "relaxed",
        "series": {
            "demand": {
                "average": {"z3": float(AVG_DEMAND[3]), "z4": float(AVG_DEMAND[4])},
                "profile": "series/refuel_profile.csv",
            },
            "electricity_price": "series/electricity_price.csv",
            "gas_price": {"constant": GAS_PRICE},
        },
    })
    profile = block_average(refuel_profile_hourly(), step)
    mean = sum(profile) / len(profile)
    profile = tuple(round(v / mean, 10) for v in profile)
    write_series_csv(root / "series" / "refuel_profile.csv",
                     {"z3": profile, "z4": profile})
    write_series_csv(root / "series" / "electricity_price.csv", {
        "z3": tuple(round(v, 4) for v in block_average(price_hourly(3), step)),
        "z4": tuple(round(v, 4) for v in block_average(price_hourly(4), step)),
    })


def make_six_zone() -> None:
    """Full six-zone network, one hourly week; meant for MPS export."""
    root = DATA / "northeast6"
    zones = []
    for idx in sorted(AVG_DEMAND):
        gens = ["electrolysis"] if idx in URBAN_NO_SMR else ["electrolysis", "smr", "smr_ccs"]
        zones.append(zone_record(idx, gens))
    dump_yaml(root / "network.yaml", {
        "zones": zones,
        "mirror_paths": True,
        "paths": [
            {"from": f"z{a}", "to": f"z{b}", "distance_miles": float(d)}
            for (a, b), d in sorted(DISTANCES.items())
        ],
    })
    dump_yaml(root / "catalog.yaml", {
        "generation": GENERATION,
        "storage": STORAGE,
        "trucks": [TRUCKS["gas_truck"], TRUCKS["liquid_truck"]],
        "pipelines": PIPELINES,
    })
    dump_yaml(root / "timegrid.yaml", {
        "step_hours": 1.0,
        "periods": [{"steps": 168}],
    })
    dump_yaml(root / "scenario.yaml", {
        "carbon_price": 100.0,
        "lost_load_cost": 1.0e7,
        "discount_rate": 0.07,
        "pipeline_cost_factor": 1.0,
        "truck_mode": "relaxed",
        "series": {
            "demand": {
                "average": {f"z{i}": float(v) for i, v in sorted(AVG_DEMAND.items())},
                "profile": "series/refuel_profile.csv",
            },
            "electricity_price": "series/electricity_price.csv",
            "gas_price": {"constant": GAS_PRICE},
        },
    })
    profile = tuple(round(v, 10) for v in refuel_profile_hourly())
    write_series_csv(root / "series" / "refuel_profile.csv",
                     {f"z{i}": profile for i in sorted(AVG_DEMAND)})
    write_series_csv(root / "series" / "electricity_price.csv", {
        f"z{i}": tuple(price_hourly(i)) for i in sorted(AVG_DEMAND)
    })


if __name__ == "__main__":
    make_mini()
    make_six_zone()
    print(f"wrote bundles under {DATA}")
