"""Synthetic weather-year fixtures shipped with the package.

The generator is deterministic (fixed numpy seeds). ``python3 -m
robust_esm.fixtures OUT_DIR`` rewrites the CSV files; the shipped copies live
in ``robust_esm/data/fixtures``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Scenario

FIXTURE_DIR = Path(__file__).parent / "data" / "fixtures"

SUPPLY = ("pv_openfield", "wind_onshore")
TECHNOLOGIES = ("pv_openfield", "wind_onshore", "battery", "salt_cavern", "electrolyser", "ccgt")

_BIG = {
    "pv_openfield": 5000.0,
    "wind_onshore": 5000.0,
    "battery": 20000.0,
    "salt_cavern": 200000.0,
    "electrolyser": 5000.0,
    "ccgt": 5000.0,
}


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    horizon: int
    scenarios: tuple[str, ...]
    reference: str
    seed: int
    # scenario -> list of (start, end[, depth]) dark-lull hours, inclusive; depth 1 is a full lull
    lulls: dict = field(default_factory=dict)
    max_capacity: dict = field(default_factory=dict)
    noise: float = 0.1
    # scenario -> (pv scale, wind scale): sunny or windy years
    scales: dict = field(default_factory=dict)
    description: str = ""


SPECS = {
    "dark_lull": FixtureSpec(
        "dark_lull", 168, ("y1", "y2", "y3", "y4"), "y1", 1,
        lulls={"y2": [(70, 105)]},
        noise=0.2,
        scales={"y3": (1.1, 0.9), "y4": (0.9, 1.1)},
        description="one week; the second year carries a 36 h dark lull",
    ),
    "twin_lulls": FixtureSpec(
        "twin_lulls", 120, ("w1", "w2", "w3", "w4"), "w1", 5,
        lulls={"w2": [(30, 47, 0.9)], "w4": [(80, 95, 0.8)]},
        noise=0.2,
        scales={"w3": (1.1, 0.9)},
        description="five days; two years with partial lulls at different times",
    ),
    "electrolyser_limited": FixtureSpec(
        "electrolyser_limited", 168, ("e1", "e2", "e3"), "e1", 1,
        lulls={"e2": [(80, 110)]},
        max_capacity={"electrolyser": 80.0},
        noise=0.2,
        scales={"e3": (0.95, 1.05)},
        description="one week with a dark lull; electrolyser capacity capped below the lull-year optimum",
    ),
}


def _demand(horizon: int) -> np.ndarray:
    t = np.arange(horizon)
    daily = 15.0 * np.sin(2 * np.pi * (t % 24 - 6) / 24)
    weekly = np.where((t // 24) % 7 >= 5, -8.0, 0.0)
    return np.round(100.0 + daily + weekly, 3)


def _pv_clearness(rng: np.random.Generator, days: int) -> np.ndarray:
    return rng.uniform(0.3, 1.0, size=days)


def _wind_driver(rng: np.random.Generator, horizon: int) -> np.ndarray:
    z = np.empty(horizon)
    z[0] = rng.normal()
    for t in range(1, horizon):
        z[t] = 0.95 * z[t - 1] + np.sqrt(1 - 0.95**2) * rng.normal()
    return z


def generate(spec: FixtureSpec) -> dict[str, Scenario]:
    """Shared base weather, a small per-year perturbation and year-specific lulls.

    At full scale hour-by-hour differences between years largely average out
    and storage sizing is driven by a few extreme events; sharing the base
    weather reproduces that at toy size.
    """
    horizon = spec.horizon
    t = np.arange(horizon)
    day = t // 24
    sun = np.clip(np.sin(np.pi * (t % 24 - 6) / 12), 0.0, None)
    base = np.random.default_rng(spec.seed)
    base_clear = _pv_clearness(base, day[-1] + 1)
    base_wind = _wind_driver(base, horizon)
    demand = _demand(horizon)
    out = {}
    for k, sid in enumerate(spec.scenarios):
        rng = np.random.default_rng(spec.seed * 100 + k + 1)
        clear = np.clip(base_clear + spec.noise * rng.normal(size=len(base_clear)), 0.1, 1.0)
        pv = sun * clear[day] * 0.8
        z = base_wind + spec.noise * 2.0 * _wind_driver(rng, horizon)
        wind = 1.0 / (1.0 + np.exp(-(z * 1.3 - 0.4)))
        pv_scale, wind_scale = spec.scales.get(sid, (1.0, 1.0))
        pv, wind = np.clip(pv * pv_scale, 0, 1), np.clip(wind * wind_scale, 0, 1)
        for start, end, *depth in spec.lulls.get(sid, []):
            level = depth[0] if depth else 1.0
            pv[start : end + 1] *= 1.0 - 0.85 * level
            wind[start : end + 1] = np.minimum(wind[start : end + 1], 0.02 + (1.0 - level) * 0.3)
        cf = {"pv_openfield": np.round(pv, 4), "wind_onshore": np.round(wind, 4)}
        out[sid] = Scenario(sid, cf, demand)
    return out


def fixture_config(spec: FixtureSpec) -> dict:
    caps = dict(_BIG)
    caps.update(spec.max_capacity)
    return {
        "description": spec.description,
        "technologies": list(TECHNOLOGIES),
        "max_capacity": caps,
        "reference": spec.reference,
        "scenarios": list(spec.scenarios),
    }


def write_fixture(spec: FixtureSpec, out_dir: Path) -> Path:
    from .dataio import write_demand_csv, write_scenario_csv

    target = Path(out_dir) / spec.name
    target.mkdir(parents=True, exist_ok=True)
    scenarios = generate(spec)
    write_demand_csv(next(iter(scenarios.values())).demand, target / "demand.csv")
    for sid, s in scenarios.items():
        write_scenario_csv(s, target / f"scenario_{sid}.csv")
    (target / "config.json").write_text(json.dumps(fixture_config(spec), indent=2, sort_keys=True) + "\n")
    return target


def fixture_names() -> list[str]:
    return list(SPECS)


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    out = Path(args[0]) if args else FIXTURE_DIR
    for spec in SPECS.values():
        print(write_fixture(spec, out))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
