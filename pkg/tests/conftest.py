from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robust_esm import CostModel, Scenario, default_catalog  # noqa: E402

FULL = ("pv_openfield", "wind_onshore", "battery", "salt_cavern", "electrolyser", "ccgt")
CAPS = {
    "pv_openfield": 500.0,
    "wind_onshore": 500.0,
    "battery": 2000.0,
    "salt_cavern": 20000.0,
    "electrolyser": 500.0,
    "ccgt": 500.0,
}

ACCEPTANCE_LINES: dict[int, str] = {}


def make_catalog(techs=FULL, **caps):
    limits = dict(CAPS)
    limits.update(caps)
    return default_catalog({t: limits[t] for t in techs}, techs)


def make_scenario(year_id, pv, wind, demand):
    return Scenario(year_id, {"pv_openfield": pv, "wind_onshore": wind}, demand)


def toy_year(year_id: str, horizon: int, seed: int, lull: tuple[int, int] | None = None, level=100.0):
    rng = np.random.default_rng(seed)
    t = np.arange(horizon)
    pv = np.clip(np.sin(np.pi * (t % 24 - 6) / 12), 0, None) * rng.uniform(0.5, 1.0, horizon)
    wind = rng.uniform(0.1, 0.8, horizon)
    if lull:
        pv[lull[0] : lull[1] + 1] *= 0.1
        wind[lull[0] : lull[1] + 1] = 0.02
    return make_scenario(year_id, np.round(pv, 4), np.round(wind, 4), np.full(horizon, level))


@pytest.fixture
def catalog():
    return make_catalog()


@pytest.fixture
def cost_model():
    return CostModel()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
