"""Feasibility testing of a fixed design against weather years."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .domain import Scenario, SystemDesign, TechnologyCatalog
from .model import build_feasibility
from .solver import Solver, SolverError

DEFAULT_EPS_GAP_FRACTION = 1e-3
DEFAULT_EPS_HOUR = 1e-6


@dataclass(frozen=True, eq=False)
class SupplyGapSeries:
    scenario_id: str
    gaps: np.ndarray
    total: float = field(default=math.nan)

    def __post_init__(self) -> None:
        gaps = np.array(self.gaps, dtype=float)
        if np.any(gaps < 0):
            raise ValueError("supply gaps must be >= 0")
        gaps.flags.writeable = False
        object.__setattr__(self, "gaps", gaps)
        if math.isnan(self.total):
            object.__setattr__(self, "total", math.fsum(gaps))

    @property
    def horizon(self) -> int:
        return len(self.gaps)

    def hours_above(self, eps_hour: float = DEFAULT_EPS_HOUR) -> np.ndarray:
        return np.flatnonzero(self.gaps > eps_hour)


@dataclass(frozen=True)
class LossOfLoadSummary:
    total_gap: float
    fraction_of_annual_demand: float
    peak_hourly_gap: float
    peak_fraction_of_hourly_demand: float
    gap_hours: int


@dataclass(frozen=True)
class RobustnessReport:
    robust: bool | None
    per_year: Mapping[str, SupplyGapSeries]
    eps_gap: float
    errors: Mapping[str, str] = field(default_factory=dict)

    @property
    def indeterminate(self) -> bool:
        return self.robust is None

    @property
    def worst(self) -> SupplyGapSeries | None:
        if not self.per_year:
            return None
        # ties broken by scenario id for reproducibility
        return max(sorted(self.per_year.values(), key=lambda g: g.scenario_id), key=lambda g: g.total)


def eps_gap_for(scenario: Scenario, fraction: float = DEFAULT_EPS_GAP_FRACTION) -> float:
    return fraction * float(np.sum(scenario.demand))


def test_feasibility(
    design: SystemDesign,
    scenario: Scenario,
    catalog: TechnologyCatalog,
    solver: Solver | None = None,
) -> SupplyGapSeries:
    """Operate ``design`` on ``scenario`` and return the minimal hourly gaps."""
    solver = Solver() if solver is None else solver
    problem = build_feasibility(design, scenario, catalog)
    solution = solver(problem)
    if not solution.optimal:
        raise SolverError(
            f"feasibility test of {design.source or 'design'} on {scenario.year_id} failed: "
            f"{solution.status.value}: {solution.message}",
            solution,
        )
    gaps = np.maximum(solution.tagged(problem, "gap"), 0.0)
    return SupplyGapSeries(scenario.year_id, gaps)


test_feasibility.__test__ = False  # not a pytest test


def is_robust(
    design: SystemDesign,
    scenarios: Sequence[Scenario],
    catalog: TechnologyCatalog,
    eps_gap: float | None = None,
    solver: Solver | None = None,
    workers: int = 1,
) -> RobustnessReport:
    """Test ``design`` on every scenario.

    ``eps_gap`` defaults to 1e-3 of the first scenario's total demand. A
    failed solve makes the result indeterminate (``robust is None``).
    """
    if not scenarios:
        raise ValueError("empty scenario set")
    eps = eps_gap_for(scenarios[0]) if eps_gap is None else eps_gap

    def run(s: Scenario):
        try:
            return s.year_id, test_feasibility(design, s, catalog, solver), None
        except SolverError as exc:
            return s.year_id, None, str(exc)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, scenarios))
    else:
        results = [run(s) for s in scenarios]
    per_year = {sid: g for sid, g, err in results if g is not None}
    errors = {sid: err for sid, _, err in results if err is not None}
    robust = None if errors else all(g.total <= eps for g in per_year.values())
    return RobustnessReport(robust, per_year, eps, errors)


def loss_of_load_summary(
    gaps: SupplyGapSeries, scenario: Scenario, eps_hour: float = DEFAULT_EPS_HOUR
) -> LossOfLoadSummary:
    if gaps.horizon != scenario.horizon:
        raise ValueError(f"gap series has {gaps.horizon} hours, scenario has {scenario.horizon}")
    demand = scenario.demand
    total_demand = float(np.sum(demand))
    peak = float(np.max(gaps.gaps)) if gaps.horizon else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        hourly = np.where(demand > 0, gaps.gaps / np.where(demand > 0, demand, 1.0), 0.0)
    return LossOfLoadSummary(
        total_gap=gaps.total,
        fraction_of_annual_demand=min(gaps.total / total_demand, 1.0) if total_demand > 0 else 0.0,
        peak_hourly_gap=peak,
        peak_fraction_of_hourly_demand=min(float(np.max(hourly)), 1.0) if gaps.horizon else 0.0,
        gap_hours=int(np.sum(gaps.gaps > eps_hour)),
    )
