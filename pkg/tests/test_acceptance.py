"""Acceptance criteria 1-8 on the shipped fixtures.

Each test records one PASS/FAIL line, printed in the terminal summary, then
asserts. The heavy per-fixture runs are computed once and cached.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache, wraps

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES, make_catalog, make_scenario
from oracles import dense_feasibility_gap
from robust_esm import (
    CostModel,
    ModificationState,
    RobustifyConfig,
    SystemDesign,
    build_capex,
    cluster_gap_hours,
    dual_bound,
    is_robust,
    load_fixture,
    oracle_monolithic,
    optimize_design,
    primal_bound_design,
    robustify,
    test_feasibility,
    total_annual_cost,
)
from robust_esm.critical_periods import extend_to_deficit
from robust_esm.feasibility import SupplyGapSeries
from robust_esm.fixtures import SPECS, fixture_names
from robust_esm.modifications import mod1_demand_increase, mod2_splice
from robust_esm.robustify import STRATEGIES
from robust_esm.solver import Solver

REL = 1e-6
HEURISTICS = ("mod1", "mod1_smoothed", "mod2", "mod3")
FIXTURES = fixture_names()


@dataclass
class FixtureRun:
    name: str
    case: object
    catalog: object
    cost_model: CostModel
    singles: dict
    single_costs: dict
    oracle_cost: float
    dual: float
    primal_cost: float
    results: dict
    seconds: float


@lru_cache(maxsize=None)
def run_fixture(name: str) -> FixtureRun:
    t0 = time.perf_counter()
    case = load_fixture(name)
    cfg = case.config
    catalog, cost_model = cfg.catalog(), cfg.cost_model()
    ids = tuple(cfg.scenarios)
    scenarios = [case.scenarios[i] for i in ids]
    singles = {s.year_id: optimize_design(s, catalog, cost_model) for s in scenarios}
    single_costs = {k: total_annual_cost(d, catalog, cost_model) for k, d in singles.items()}
    oracle_cost = total_annual_cost(oracle_monolithic(scenarios, catalog, cost_model), catalog, cost_model)
    primal_cost = total_annual_cost(primal_bound_design(singles), catalog, cost_model)
    results = {
        s: robustify(RobustifyConfig(s, cfg.reference, ids, max_iterations=20), case.scenarios, catalog, cost_model)
        for s in STRATEGIES
    }
    return FixtureRun(name, case, catalog, cost_model, singles, single_costs, oracle_cost,
                      dual_bound(single_costs), primal_cost, results, time.perf_counter() - t0)


def record(k: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"


def test_fixture_shape():
    assert len(FIXTURES) >= 3
    for name in FIXTURES:
        case = load_fixture(name)
        assert 3 <= len(case.scenarios) <= 5
        horizons = {s.horizon for s in case.scenarios.values()}
        assert len(horizons) == 1 and 48 <= horizons.pop() <= 336


def test_criterion_1_bounds_sandwich():
    problems = []
    for name in FIXTURES:
        r = run_fixture(name)
        lo, hi = r.oracle_cost * (1 - REL), r.primal_cost * (1 + REL)
        if r.dual > r.oracle_cost * (1 + REL):
            problems.append(f"{name}: dual {r.dual:.6g} > oracle {r.oracle_cost:.6g}")
        for s, res in r.results.items():
            if res.converged and not lo <= res.cost <= hi:
                problems.append(f"{name}/{s}: {res.cost:.6g} outside [{r.oracle_cost:.6g}, {r.primal_cost:.6g}]")
        if r.seconds >= 60:
            problems.append(f"{name}: {r.seconds:.1f} s")
    times = ", ".join(f"{n} {run_fixture(n).seconds:.1f}s" for n in FIXTURES)
    record(1, not problems, "; ".join(problems) or f"all fixtures ({times})")
    assert not problems


def test_criterion_2_robustness_certificate():
    problems = []
    for name in FIXTURES:
        r = run_fixture(name)
        scenarios = list(r.case.scenarios.values())
        eps = 1e-3 * float(np.sum(scenarios[0].demand))
        for s in HEURISTICS:
            res = r.results[s]
            if not res.converged or res.iterations > 20:
                problems.append(f"{name}/{s} not converged in {res.iterations}")
                continue
            if not is_robust(res.design, scenarios, r.catalog, eps).robust:
                problems.append(f"{name}/{s} fails the independent robustness check")
    record(2, not problems, "; ".join(problems) or "mod1, mod1_smoothed, mod2, mod3 robust on all fixtures")
    assert not problems


def test_criterion_3_null_results():
    limited = run_fixture("electrolyser_limited")
    mod4_ok = not limited.results["mod4"].converged
    mod6_at_cap = [
        n for n in FIXTURES
        if not (res := run_fixture(n).results["mod6"]).converged
        and res.iterations == 20
        and max(res.final_gaps.values()) > res.eps_gap
    ]
    mod6_never = all(not run_fixture(n).results["mod6"].converged for n in FIXTURES)
    ok = mod4_ok and bool(mod6_at_cap) and mod6_never
    record(3, ok, f"mod4 converged={limited.results['mod4'].converged} on electrolyser_limited; "
                  f"mod6 residual gaps after 20 iterations on {mod6_at_cap}")
    assert mod4_ok
    assert mod6_at_cap
    assert mod6_never


def test_criterion_4_oracle_gap():
    problems, ratios = [], []
    for name in FIXTURES:
        r = run_fixture(name)
        costs = [res.cost for res in r.results.values() if res.converged]
        if not costs:
            problems.append(f"{name}: no converged strategy")
            continue
        best = min(costs) / r.oracle_cost
        ratios.append(f"{name} {best:.4f}")
        if not (1 - REL) <= best <= 1.05:
            problems.append(f"{name}: best/oracle = {best:.4f}")
    record(4, not problems, "; ".join(problems) or "best/oracle: " + ", ".join(ratios))
    assert not problems


def _random_instance(rng, k):
    H = int(rng.integers(4, 13))
    catalog = make_catalog(
        battery=float(rng.uniform(1, 300)), salt_cavern=float(rng.uniform(1, 3000)),
        electrolyser=float(rng.uniform(1, 200)), ccgt=float(rng.uniform(1, 200)),
    )
    caps = {p: float(rng.uniform(0, catalog[p].max_capacity)) for p in catalog}
    if k % 4 == 0:
        caps["ccgt"] = 0.0
    scenario = make_scenario("r", rng.uniform(0, 1, H).round(3), rng.uniform(0, 1, H).round(3),
                             rng.uniform(0, 200, H).round(2))
    return catalog, SystemDesign(caps), scenario


def test_criterion_5_comp_against_dense_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        catalog, design, scenario = _random_instance(rng, k)
        ours = test_feasibility(design, scenario, catalog).total
        params = {"eff_in": catalog.electrolyser_efficiency(), "eff_out": catalog.ccgt_efficiency(),
                  "supply": catalog.supply, "battery": catalog.battery, "electrolyser": catalog.electrolyser,
                  "h2_storage": catalog.h2_storage, "ccgt": catalog.ccgt}
        ref = dense_feasibility_gap(dict(design.capacities), scenario.capacity_factors, scenario.demand, params)
        worst = max(worst, abs(ours - ref))
    record(5, worst <= 1e-6, f"20 random instances, max |difference| {worst:.2e}")
    assert worst <= 1e-6


PROPERTY_RUNS: dict[str, int] = {}
PROPERTY_FAILURES: set[str] = set()


def tracked(fn):
    """Count generated cases and remember failures for the criterion 6 line."""
    @wraps(fn)
    def wrapper(*args, **kwargs):
        PROPERTY_RUNS[fn.__name__] = PROPERTY_RUNS.get(fn.__name__, 0) + 1
        try:
            fn(*args, **kwargs)
        except Exception:
            PROPERTY_FAILURES.add(fn.__name__)
            raise
    return wrapper


gap_arrays = st.lists(st.floats(0, 1e4, allow_nan=False), min_size=1, max_size=60).map(np.array)


@settings(max_examples=200, deadline=None)
@given(gap_arrays, st.integers(0, 30))
@tracked
def test_criterion_6_mod1_conserves_total(gaps, window):
    state = mod1_demand_increase(ModificationState(), gaps, smoothing=window or None)
    added = state.additions(len(gaps))
    assert np.all(added >= 0)
    assert added.sum() == pytest.approx(gaps.sum(), rel=1e-12, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e3, allow_nan=False), min_size=1, max_size=80).map(np.array), st.integers(0, 12))
@tracked
def test_criterion_6_clusters_cover_gap_hours(gaps, join):
    periods = cluster_gap_hours(SupplyGapSeries("s", gaps), max_join_distance=join)
    covered = set()
    for p in periods:
        hours = set(p.hours)
        assert not covered & hours
        covered |= hours
    assert set(np.flatnonzero(gaps > 1e-6)) <= covered
    for a, b in zip(periods, periods[1:]):
        assert b.start_hour > a.end_hour


_SPLICE_CATALOG = make_catalog()
_SPLICE_SOLVER = Solver()


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10**6), st.integers(6, 16), st.data())
@tracked
def test_criterion_6_identity_splice(seed, horizon, data):
    rng = np.random.default_rng(seed)
    ref = make_scenario("a", rng.uniform(0, 1, horizon).round(3), rng.uniform(0, 1, horizon).round(3),
                        rng.uniform(50, 150, horizon).round(1))
    start = data.draw(st.integers(0, horizon - 1))
    end = data.draw(st.integers(start, horizon - 1))
    _, synthetic = mod2_splice(ModificationState(), ref, ref, (start, end))
    before = _SPLICE_SOLVER(build_capex(ref, _SPLICE_CATALOG)).objective
    after = _SPLICE_SOLVER(build_capex(synthetic, _SPLICE_CATALOG)).objective
    assert after == pytest.approx(before, rel=1e-8)


def test_criterion_6_summary():
    ok = len(PROPERTY_RUNS) == 3 and min(PROPERTY_RUNS.values()) >= 200 and not PROPERTY_FAILURES
    detail = ", ".join(f"{k[len('test_criterion_6_'):]} {v} cases" for k, v in sorted(PROPERTY_RUNS.items()))
    record(6, ok, detail + (f"; failed: {sorted(PROPERTY_FAILURES)}" if PROPERTY_FAILURES else ""))
    assert ok


def _lull_period():
    spec = SPECS["dark_lull"]
    ((donor, ((lull_start, lull_end, *_),)),) = spec.lulls.items()
    return spec, donor, lull_start, lull_end


def test_criterion_7_splice_closes_lull_gap():
    spec, donor_id, lull_start, lull_end = _lull_period()
    r = run_fixture("dark_lull")
    ref, donor = r.case.scenarios[spec.reference], r.case.scenarios[donor_id]
    eps = 1e-3 * float(np.sum(ref.demand))
    design = r.singles[spec.reference]
    before = test_feasibility(design, donor, r.catalog)
    periods = [extend_to_deficit(p, design, donor, r.catalog) for p in cluster_gap_hours(before)]
    period = next(p for p in periods if p.start_hour <= lull_end and lull_start <= p.end_hour)
    state, synthetic = mod2_splice(ModificationState(), ref, donor, period)
    after = test_feasibility(optimize_design(synthetic, r.catalog, r.cost_model, state), donor, r.catalog)
    window = slice(period.start_hour, period.end_hour + 1)
    g0, g1 = float(before.gaps[window].sum()), float(after.gaps[window].sum())
    ok = g0 > 0 and g1 <= eps
    record(7, ok, f"period [{period.start_hour}, {period.end_hour}] of {donor_id}: gap {g0:.4g} -> {g1:.3g} "
                  f"(eps {eps:.4g})")
    assert g0 > 0
    assert g1 <= eps


def test_criterion_8_direction_of_investment():
    spec = SPECS["dark_lull"]
    r = run_fixture("dark_lull")
    ref = r.singles[spec.reference]
    converged = {s: res for s, res in r.results.items() if s in HEURISTICS and res.converged}
    best = min(converged, key=lambda s: converged[s].cost)
    design = converged[best].design
    keys = (r.catalog.ccgt, r.catalog.h2_storage)
    ok = all(design[k] >= ref[k] * (1 - REL) for k in keys)
    others = {s: all(res.design[k] >= ref[k] * (1 - REL) for k in keys) for s, res in converged.items()}
    record(8, ok, f"robust design ({best}) ccgt {design[keys[0]]:.4g} >= {ref[keys[0]]:.4g}, "
                  f"cavern {design[keys[1]]:.4g} >= {ref[keys[1]]:.4g}; per strategy {others}")
    assert ok
