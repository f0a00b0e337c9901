"""The robustification loop, cost bounds and the exact multi-scenario oracle.

Each iteration solves the modified capacity-expansion problem on the
reference data, tests the design on every scenario and, unless all supply
gaps are below ``eps_gap``, modifies the problem using the gaps of the
worst scenario.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .critical_periods import (
    DEFAULT_JOIN_DISTANCE,
    CriticalPeriod,
    cluster_gap_hours,
    extend_to_deficit,
    flh_reduction,
    rank_candidate_periods,
)
from .domain import (
    CostModel,
    Scenario,
    SchemaError,
    SystemDesign,
    TechnologyCatalog,
    total_annual_cost,
)
from .feasibility import DEFAULT_EPS_GAP_FRACTION, DEFAULT_EPS_HOUR, RobustnessReport, is_robust
from .model import DEFAULT_MAX_VARIABLES, build_capex, build_monolithic, design_from_solution
from .modifications import (
    DEFAULT_ALPHA,
    DEFAULT_SMOOTHING_WINDOW,
    ModificationState,
    mod1_demand_increase,
    mod2_splice,
    mod3_h2_prefix,
    mod3a_yearly_balance,
    mod3b_local_h2,
    mod4_local_capacity,
    mod6_global_h2,
)
from .solver import SolveStatus, Solver, SolverError

log = logging.getLogger(__name__)

STRATEGIES = ("mod1", "mod1_smoothed", "mod2", "mod3", "mod4", "mod6")


@dataclass(frozen=True)
class RobustifyConfig:
    strategy: str
    reference_scenario: str
    scenario_set: tuple[str, ...]
    max_iterations: int = 20
    eps_gap_fraction: float = DEFAULT_EPS_GAP_FRACTION
    eps_hour: float = DEFAULT_EPS_HOUR
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
    join_distance: int = DEFAULT_JOIN_DISTANCE
    padding: int = 0
    alpha: float | None = None
    loss_weight: float | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "scenario_set", tuple(self.scenario_set))
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.reference_scenario not in self.scenario_set:
            raise ValueError(f"reference {self.reference_scenario!r} not in scenario set")
        if self.eps_gap_fraction < 0:
            raise ValueError("eps_gap_fraction must be >= 0")


@dataclass(frozen=True)
class ModificationRecord:
    iteration: int
    kind: str
    scenario_id: str
    detail: Mapping = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class RobustifyResult:
    design: SystemDesign
    converged: bool
    iterations: int
    cost_trajectory: tuple[float, ...]
    final_gaps: Mapping[str, float]
    modification_log: tuple[ModificationRecord, ...]
    eps_gap: float
    state: ModificationState
    reference_data: Scenario
    last_report: RobustnessReport

    @property
    def cost(self) -> float:
        return self.cost_trajectory[-1]


def optimize_design(
    scenario: Scenario,
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    mods: ModificationState | None = None,
    solver: Solver | None = None,
    source: str | None = None,
) -> SystemDesign:
    solver = Solver() if solver is None else solver
    problem = build_capex(scenario, catalog, cost_model, mods)
    solution = solver(problem).require_optimal(f"CAPEX on {scenario.year_id}")
    shed = float(np.sum(solution.tagged(problem, "shed")))
    if shed > 1e-6:
        log.warning("CAPEX on %s sheds %.4g MWh", scenario.year_id, shed)
    return design_from_solution(problem, solution.values, catalog, source or scenario.year_id)


def single_year_optima(
    scenarios: Sequence[Scenario],
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    solver: Solver | None = None,
) -> dict[str, SystemDesign]:
    return {s.year_id: optimize_design(s, catalog, cost_model, solver=solver) for s in scenarios}


def dual_bound(per_year_costs: Mapping[str, float]) -> float:
    """Highest single-year optimal cost: no robust design can be cheaper."""
    if not per_year_costs:
        raise ValueError("no costs")
    return max(per_year_costs.values())


def primal_bound_design(per_year_designs: Sequence[SystemDesign] | Mapping[str, SystemDesign]) -> SystemDesign:
    """Componentwise maximum of the single-year designs."""
    designs = list(per_year_designs.values()) if isinstance(per_year_designs, Mapping) else list(per_year_designs)
    if not designs:
        raise ValueError("no designs")
    techs = set(designs[0].capacities)
    if any(set(d.capacities) != techs for d in designs):
        raise ValueError("designs cover different technologies")
    caps = {p: max(d[p] for d in designs) for p in designs[0].capacities}
    return SystemDesign(caps, "primal_bound")


def oracle_monolithic(
    scenarios: Sequence[Scenario],
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    solver: Solver | None = None,
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> SystemDesign:
    """Cheapest design operable without gaps in every scenario (one joint LP)."""
    solver = Solver() if solver is None else solver
    problem = build_monolithic(scenarios, catalog, cost_model, max_variables=max_variables)
    solution = solver(problem).require_optimal("monolithic oracle")
    return design_from_solution(problem, solution.values, catalog, "oracle")


def _worst(report: RobustnessReport, eps: float):
    worst = report.worst
    return worst if worst is not None and worst.total > eps else None


def _periods(gaps, config: RobustifyConfig, iteration: int, design, scenario, catalog) -> list[CriticalPeriod]:
    """Gap-hour clusters widened over adjacent hours of hourly deficit."""
    found = cluster_gap_hours(
        gaps, config.join_distance, config.eps_hour, padding=config.padding, iteration=iteration
    )
    return _merge_touching([extend_to_deficit(p, design, scenario, catalog) for p in found])


def robustify(
    config: RobustifyConfig,
    scenarios: Mapping[str, Scenario] | Sequence[Scenario],
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    solver: Solver | None = None,
) -> RobustifyResult:
    solver = Solver() if solver is None else solver
    pool = scenarios if isinstance(scenarios, Mapping) else {s.year_id: s for s in scenarios}
    missing = [sid for sid in config.scenario_set if sid not in pool]
    if missing:
        raise SchemaError(f"unknown scenarios {missing}")
    tested = [pool[sid] for sid in config.scenario_set]
    reference = pool[config.reference_scenario]
    for s in tested:
        if s.horizon != reference.horizon or not np.array_equal(s.demand, reference.demand):
            raise SchemaError(f"scenario {s.year_id} does not share horizon and demand with the reference")

    alpha = config.alpha
    if alpha is None:
        alpha = catalog.electrolyser_efficiency() or DEFAULT_ALPHA
    eps = config.eps_gap_fraction * float(np.sum(reference.demand))
    state = ModificationState(alpha=alpha)
    current = reference
    costs: list[float] = []
    records: list[ModificationRecord] = []
    mod3_stage: dict[str, int] = {}
    converged = False
    report: RobustnessReport | None = None
    design: SystemDesign | None = None

    for iteration in range(1, config.max_iterations + 1):
        try:
            candidate = optimize_design(current, catalog, cost_model, state, solver, source=f"{config.strategy}#{iteration}")
        except SolverError as exc:
            if design is None or exc.solution is None or exc.solution.status is not SolveStatus.INFEASIBLE:
                raise
            # the accumulated modifications over-constrain CAPEX*; keep the last design
            records.append(ModificationRecord(iteration, "capex_infeasible", config.reference_scenario, {}))
            break
        design = candidate
        costs.append(total_annual_cost(design, catalog, cost_model))
        report = is_robust(design, tested, catalog, eps, solver, config.workers)
        if report.indeterminate:
            raise SolverError(f"feasibility tests failed in iteration {iteration}: {dict(report.errors)}")
        log.info(
            "%s iteration %d: cost %.6g, max gap %.6g",
            config.strategy, iteration, costs[-1], max(g.total for g in report.per_year.values()),
        )
        if report.robust:
            converged = True
            break
        if iteration == config.max_iterations:
            break
        worst = _worst(report, eps)
        state, current, new = _apply(config, state, current, reference, pool, design, report, worst,
                                     catalog, iteration, mod3_stage)
        records.extend(new)

    assert design is not None and report is not None
    final_gaps = {sid: g.total for sid, g in report.per_year.items()}
    return RobustifyResult(
        design=design,
        converged=converged,
        iterations=len(costs),
        cost_trajectory=tuple(costs),
        final_gaps=final_gaps,
        modification_log=tuple(records),
        eps_gap=eps,
        state=state,
        reference_data=current,
        last_report=report,
    )


def _apply(config, state, current, reference, pool, design, report, worst, catalog, iteration, mod3_stage):
    strategy = config.strategy
    sid = worst.scenario_id
    donor = pool[sid]
    records = []

    def record(kind: str, scenario_id: str = sid, **detail):
        records.append(ModificationRecord(iteration, kind, scenario_id, detail))

    if strategy in ("mod1", "mod1_smoothed"):
        window = config.smoothing_window if strategy == "mod1_smoothed" else None
        state = mod1_demand_increase(state, worst, window)
        record("mod1", total=worst.total, smoothing=window or 0)

    elif strategy == "mod2":
        candidates = []
        for gaps in report.per_year.values():
            if gaps.total > config.eps_hour:
                candidates.extend(_periods(gaps, config, iteration, design, pool[gaps.scenario_id], catalog))
        ranked = rank_candidate_periods(design, current, pool, candidates, catalog)
        taken = [(s.start, s.end) for s in state.spliced_periods]
        chosen = None
        for period in ranked:
            spans = _free_spans(period, taken)
            if spans:
                chosen = (period, spans)
                break
        kind = "mod2"
        if chosen is None:
            # every gap period is already spliced: fall back to the free block
            # whose data lowers the reference FLH most
            kind = "mod2_flh"
            chosen = _flh_fallback(report, pool, current, taken, catalog, config.eps_hour)
        if chosen is None:
            record("mod2_none", candidates=len(ranked))
        else:
            period, spans = chosen
            for start, end in spans:
                state, current = mod2_splice(state, current, pool[period.scenario_id], (start, end), iteration)
                record(kind, period.scenario_id, start=start, end=end, avg_gap=period.avg_gap)

    elif strategy == "mod3":
        stage = mod3_stage.get(sid, 0)
        if stage == 0:
            state = mod3a_yearly_balance(state, donor, worst.total, config.loss_weight)
            record("mod3a", gap_total=worst.total)
            mod3_stage[sid] = 1
        elif stage == 1:
            periods = _periods(worst, config, iteration, design, donor, catalog)
            for p in periods:
                state = mod3b_local_h2(state, donor, p)
            ordered = sorted(
                (c for c in state.sigma_vars.values() if c.scenario_id == sid), key=lambda c: c.start
            )
            state = mod3_h2_prefix(state, donor, [(c.start, c.end) for c in ordered])
            record("mod3b", periods=[[p.start_hour, p.end_hour] for p in periods])
            mod3_stage[sid] = 2
        else:
            state = mod1_demand_increase(state, worst)
            record("mod1", total=worst.total, smoothing=0)

    elif strategy == "mod4":
        periods = _periods(worst, config, iteration, design, donor, catalog)
        for p in periods:
            state = mod4_local_capacity(state, donor, p)
        record("mod4", periods=[[p.start_hour, p.end_hour] for p in periods])

    elif strategy == "mod6":
        state = mod6_global_h2(state, worst.total)
        record("mod6", total=worst.total)
    return state, current, records


def _flh_fallback(report, pool, current, taken, catalog, eps_hour):
    horizon = current.horizon
    best = None
    for gaps in sorted(report.per_year.values(), key=lambda g: g.scenario_id):
        if gaps.total <= eps_hour:
            continue
        whole = CriticalPeriod(gaps.scenario_id, 0, horizon - 1)
        for start, end in _free_spans(whole, taken):
            block = CriticalPeriod(gaps.scenario_id, start, end)
            donor = pool[gaps.scenario_id]
            same = all(
                np.array_equal(current.capacity_factors[p][start : end + 1], donor.capacity_factors[p][start : end + 1])
                for p in catalog.supply
            )
            gain = flh_reduction(block, current, donor, catalog)
            if not same and (best is None or gain > best[0]):
                best = (gain, block)
    if best is None:
        return None
    return best[1], [(best[1].start_hour, best[1].end_hour)]


def _merge_touching(periods: list[CriticalPeriod]) -> list[CriticalPeriod]:
    out: list[CriticalPeriod] = []
    for p in sorted(periods, key=lambda p: p.start_hour):
        if out and p.start_hour <= out[-1].end_hour + 1:
            last = out[-1]
            out[-1] = replace(last, end_hour=max(last.end_hour, p.end_hour), gap_energy=last.gap_energy + p.gap_energy)
        else:
            out.append(p)
    return out


def _free_spans(period: CriticalPeriod, taken: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Maximal sub-ranges of ``period`` not covered by earlier splices."""
    free = np.ones(period.length, dtype=bool)
    for s, e in taken:
        lo, hi = max(s, period.start_hour), min(e, period.end_hour)
        if lo <= hi:
            free[lo - period.start_hour : hi - period.start_hour + 1] = False
    spans = []
    for k in np.flatnonzero(free):
        hour = period.start_hour + int(k)
        if spans and spans[-1][1] == hour - 1:
            spans[-1][1] = hour
        else:
            spans.append([hour, hour])
    return [(s, e) for s, e in spans]


def record_to_dict(record: ModificationRecord) -> dict:
    out = asdict(record)
    out["detail"] = {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in record.detail.items()}
    return out
