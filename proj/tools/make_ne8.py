#!/usr/bin/env python3
"""Writes data/ne8.json: 8-zone New England instance with synthetic hourly series.

Installed capacities and candidate costs follow the published regional mix;
the hourly demand, wind and solar shapes are synthetic.
"""
import json
import math
import random
import sys

rng = random.Random(2020)
DAYS = 56
H = 24

zones = [  # id, state, mean load MW
    ("ME", "ME", 1300), ("NH", "NH", 1300), ("VT", "VT", 650), ("CT", "CT", 3400),
    ("RI", "RI", 900), ("SEMA", "MA", 1700), ("WCMA", "MA", 1800), ("NEMA", "MA", 2800),
]
ma_share = {"NEMA": 0.4, "WCMA": 0.3, "SEMA": 0.3}

capacity = {  # MW by state
    "wind": {"ME": 221.2, "NH": 140.5, "VT": 39.0, "MA": 681.7, "CT": 132.5, "RI": 85.0},
    "solar": {"ME": 41.4, "NH": 83.8, "VT": 306.3, "MA": 1871.3, "CT": 464.3, "RI": 116.7},
    "nuclear": {"NH": 1244.0, "VT": 620.2, "MA": 684.7, "CT": 2116.0},
    "coal": {"ME": 311.8, "NH": 95.4, "MA": 144.4, "CT": 744.4, "RI": 1099.5},
    "oil": {"ME": 1146.9, "NH": 400.2, "MA": 1111.7, "CT": 2212.8, "RI": 435.0},
    "gas": {"ME": 3862.7, "NH": 508.0, "MA": 2249.6, "CT": 621.4, "RI": 3491.6},
}
cost = {"wind": 1.1, "solar": 0.4, "nuclear": 8.0, "coal": 28.0, "oil": 95.0, "gas": 36.0}

lines = [  # from, to, reactance, limit MW
    ("ME", "NH", 0.020, 1900), ("NH", "VT", 0.035, 900), ("NH", "NEMA", 0.020, 1500),
    ("NH", "WCMA", 0.030, 700), ("VT", "WCMA", 0.040, 600), ("WCMA", "NEMA", 0.015, 2500),
    ("NEMA", "SEMA", 0.020, 2200), ("WCMA", "CT", 0.020, 2000), ("WCMA", "SEMA", 0.030, 1200),
    ("SEMA", "RI", 0.015, 2000), ("RI", "CT", 0.030, 800),
]


def round3(v):
    return round(v, 3)


def demand_series(mean):
    out = []
    for d in range(DAYS):
        season = 1.0 + 0.12 * math.cos(2 * math.pi * d / DAYS)
        weekend = 0.9 if d % 7 in (5, 6) else 1.0
        level = rng.gauss(1.0, 0.03)
        for h in range(H):
            shape = 0.8 + 0.25 * math.exp(-((h - 18) / 3.5) ** 2) + 0.12 * math.exp(-((h - 10) / 3.0) ** 2)
            out.append(round3(mean * season * weekend * level * shape * rng.gauss(1.0, 0.01)))
    return out


def wind_series():
    out, x = [], 0.35
    for d in range(DAYS):
        for h in range(H):
            x += 0.15 * (0.35 - x) + rng.gauss(0, 0.06)
            x = min(0.95, max(0.02, x))
            out.append(round3(x))
    return out


def solar_series():
    out = []
    for d in range(DAYS):
        season = 0.75 + 0.25 * math.cos(2 * math.pi * (d - DAYS / 2) / DAYS)
        clouds = min(1.0, max(0.2, rng.gauss(0.8, 0.2)))
        for h in range(H):
            sun = max(0.0, math.sin(math.pi * (h - 6) / 13)) if 6 <= h <= 19 else 0.0
            out.append(round3(0.85 * season * clouds * sun))
    return out


def state_zones(state):
    return [z for z, s, _ in zones if s == state]


generators, availability = [], {}
for fuel, per_state in capacity.items():
    renewable = fuel in ("wind", "solar")
    for state, mw in per_state.items():
        for z in state_zones(state):
            share = ma_share[z] if state == "MA" else 1.0
            gid = f"{fuel}_{z}"
            g = {"id": gid, "node": z, "status": "existing", "tech": "renewable" if renewable else "controllable",
                 "fuel": fuel, "g_max": round3(mw * share), "cost": cost[fuel]}
            if renewable:
                key = f"{fuel}_{state}"
                if key not in availability:
                    availability[key] = wind_series() if fuel == "wind" else solar_series()
                g["forecast_series"] = key
                g["error_sd"] = 0.1 if fuel == "wind" else 0.2
            generators.append(g)

# candidates of the strategic state
generators += [
    {"id": "wind_new_NH", "node": "NH", "status": "candidate", "tech": "renewable", "fuel": "wind",
     "cost": 1.1, "capital_cost": 1630000, "build_max": 1000, "forecast_series": "wind_NH", "error_sd": 0.1},
    {"id": "solar_new_NH", "node": "NH", "status": "candidate", "tech": "renewable", "fuel": "solar",
     "cost": 0.4, "capital_cost": 2434000, "build_max": 1000, "forecast_series": "solar_NH", "error_sd": 0.2},
    {"id": "gas_new_NH", "node": "NH", "status": "candidate", "tech": "controllable", "fuel": "gas",
     "cost": 20.0, "capital_cost": 895000, "build_max": 500},
]

doc = {
    "schema_version": 1,
    "name": "ne8",
    "description": "8-zone New England system; installed capacity by state and candidate costs from the regional "
                   "mix, hourly demand and renewable availability are SYNTHETIC shapes generated by tools/make_ne8.py",
    "network": {
        "states": ["ME", "NH", "VT", "MA", "CT", "RI"],
        "nodes": [dict({"id": z, "state": s}, **({"interface_max": 4000} if s == "NH" else {})) for z, s, _ in zones],
        "lines": [{"id": f"{a}-{b}", "from": a, "to": b, "reactance": x, "flow_max": f} for a, b, x, f in lines],
    },
    "series": {
        "hours_per_day": H,
        "demand": {z: demand_series(m) for z, _, m in zones},
        "availability": availability,
    },
    "clustering": {"k": 5},
    "generators": generators,
    "demand": {"utility_slope": 0.25, "intercept_scale": 0.25, "intercept_offset": 20},
    "policy": {"strategic_state": "NH", "rps_fraction": 0.252, "eta": 0.03, "peak_hours": [13, 21],
               "recovery_years": 10, "discount_rate": 0.05},
}

path = sys.argv[1] if len(sys.argv) > 1 else "data/ne8.json"
with open(path, "w") as f:
    json.dump(doc, f, separators=(",", ":"))
    f.write("\n")
