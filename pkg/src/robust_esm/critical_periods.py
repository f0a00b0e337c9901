"""Critical time periods: clustering supply-gap hours and scoring them."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .domain import Scenario, SystemDesign, TechnologyCatalog, potential_supply_series
from .feasibility import DEFAULT_EPS_HOUR, SupplyGapSeries

DEFAULT_JOIN_DISTANCE = 6


@dataclass(frozen=True)
class CriticalPeriod:
    """Inclusive hour range ``[start_hour, end_hour]`` of one scenario.

    ``avg_gap`` (mean of potential supply minus demand, negative means a
    deficit) and ``flh_sum`` are filled in by :func:`evaluate_periods`.
    """

    scenario_id: str
    start_hour: int
    end_hour: int
    gap_energy: float = 0.0
    avg_gap: float | None = None
    flh_sum: float | None = None
    iteration_found: int = 0

    def __post_init__(self) -> None:
        if self.start_hour > self.end_hour:
            raise ValueError(f"empty period [{self.start_hour}, {self.end_hour}]")

    @property
    def length(self) -> int:
        return self.end_hour - self.start_hour + 1

    @property
    def hours(self) -> range:
        return range(self.start_hour, self.end_hour + 1)

    def overlaps(self, other: "CriticalPeriod") -> bool:
        return self.start_hour <= other.end_hour and other.start_hour <= self.end_hour


def cluster_gap_hours(
    gaps: SupplyGapSeries,
    max_join_distance: int = DEFAULT_JOIN_DISTANCE,
    eps_hour: float = DEFAULT_EPS_HOUR,
    padding: int = 0,
    iteration: int = 0,
) -> list[CriticalPeriod]:
    """Single-linkage clustering of gap hours along the time axis.

    Two gap hours end up in one period when a chain of gap hours links
    them with consecutive distances ``<= max_join_distance``. On a line this
    is exactly a split of the sorted hours wherever the step exceeds the
    threshold. ``padding`` widens each period (clipped to the horizon) and
    merges periods that then touch.
    """
    hours = np.flatnonzero(gaps.gaps > eps_hour)
    if len(hours) == 0:
        return []
    breaks = np.flatnonzero(np.diff(hours) > max_join_distance)
    starts = np.concatenate([[hours[0]], hours[breaks + 1]])
    ends = np.concatenate([hours[breaks], [hours[-1]]])
    spans = []
    for s, e in zip(starts.tolist(), ends.tolist()):
        s, e = max(s - padding, 0), min(e + padding, gaps.horizon - 1)
        if spans and s <= spans[-1][1] + 1 and padding > 0:
            spans[-1][1] = max(spans[-1][1], e)
        else:
            spans.append([s, e])
    return [
        CriticalPeriod(
            gaps.scenario_id, s, e, float(np.sum(gaps.gaps[s : e + 1])), iteration_found=iteration
        )
        for s, e in spans
    ]


def extend_to_deficit(
    period: CriticalPeriod, design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog
) -> CriticalPeriod:
    """Widen ``period`` over the adjacent hours where potential supply falls short of demand.

    Gap hours often sit at the end of a lull, after storage has run dry; the
    hours that drained the storage belong to the same critical period.
    """
    deficit = potential_supply_series(design, scenario, catalog) - scenario.demand < 0
    start, end = period.start_hour, period.end_hour
    while start > 0 and deficit[start - 1]:
        start -= 1
    while end < scenario.horizon - 1 and deficit[end + 1]:
        end += 1
    return replace(period, start_hour=start, end_hour=end)


def average_hourly_gap(
    design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog, period
) -> float:
    """Mean over the period of full-load potential supply minus demand."""
    start, end = (period.start_hour, period.end_hour) if hasattr(period, "start_hour") else period
    if start > end:
        raise ValueError("empty period")
    if start < 0 or end >= scenario.horizon:
        raise ValueError(f"period [{start}, {end}] outside horizon {scenario.horizon}")
    surplus = potential_supply_series(design, scenario, catalog) - scenario.demand
    return float(np.mean(surplus[start : end + 1]))


def period_flh(scenario: Scenario, catalog: TechnologyCatalog, start: int, end: int) -> float:
    """Sum of renewable capacity factors over the period and all supply technologies."""
    return float(sum(np.sum(scenario.capacity_factors[p][start : end + 1]) for p in catalog.supply))


def evaluate_periods(
    design: SystemDesign,
    scenario: Scenario,
    catalog: TechnologyCatalog,
    periods: Sequence[CriticalPeriod],
) -> list[CriticalPeriod]:
    surplus = potential_supply_series(design, scenario, catalog) - scenario.demand
    out = []
    for p in periods:
        out.append(
            replace(
                p,
                avg_gap=float(np.mean(surplus[p.start_hour : p.end_hour + 1])),
                flh_sum=period_flh(scenario, catalog, p.start_hour, p.end_hour),
            )
        )
    return out


def flh_reduction(period: CriticalPeriod, reference: Scenario, donor: Scenario, catalog) -> float:
    """How much splicing ``period`` from ``donor`` lowers the reference FLH."""
    s, e = period.start_hour, period.end_hour
    return period_flh(reference, catalog, s, e) - period_flh(donor, catalog, s, e)


def rank_candidate_periods(
    design: SystemDesign,
    ref_scenario: Scenario,
    donor_scenario: Scenario | Mapping[str, Scenario],
    periods: Sequence[CriticalPeriod],
    catalog: TechnologyCatalog,
) -> list[CriticalPeriod]:
    """Order periods for splicing.

    Periods with a negative average hourly gap on their donor data come
    first, most negative first. The rest follow by decreasing FLH reduction
    relative to ``ref_scenario``. Ties go to ``(scenario_id, start_hour)``.
    """
    donors = {donor_scenario.year_id: donor_scenario} if isinstance(donor_scenario, Scenario) else donor_scenario
    keyed = []
    for p in periods:
        donor = donors[p.scenario_id]
        (scored,) = evaluate_periods(design, donor, catalog, [p])
        if scored.avg_gap < 0:
            key = (0, scored.avg_gap, p.scenario_id, p.start_hour)
        else:
            key = (1, -flh_reduction(p, ref_scenario, donor, catalog), p.scenario_id, p.start_hour)
        keyed.append((key, scored))
    keyed.sort(key=lambda kv: kv[0])
    return [p for _, p in keyed]
