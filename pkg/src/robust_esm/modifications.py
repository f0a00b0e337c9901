"""Problem modifications applied between robustification iterations.

Each operation takes a :class:`ModificationState` and returns a new one;
:func:`robust_esm.model.build_capex` turns the state into extra demand,
auxiliary variables and extra rows. Cut specs store the per-technology
weather sums of the scenario they were derived from, while demand terms are
evaluated at build time from the current (modified) demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .domain import Scenario, SchemaError

DEFAULT_ALPHA = 0.7
DEFAULT_SMOOTHING_WINDOW = 12


class SpliceOverlapError(ValueError):
    pass


def _hours(period) -> tuple[int, int]:
    if isinstance(period, tuple):
        return int(period[0]), int(period[1])
    return int(period.start_hour), int(period.end_hour)


def period_id(scenario_id: str, start: int, end: int) -> str:
    return f"{scenario_id}:{start}-{end}"


def _energy(scenario: Scenario, start: int, stop: int) -> tuple[tuple[str, float], ...]:
    """Sum of capacity factors per technology over hours ``start .. stop-1``."""
    return tuple(
        (p, float(np.sum(cf[start:stop]))) for p, cf in sorted(scenario.capacity_factors.items())
    )


@dataclass(frozen=True)
class Splice:
    start: int
    end: int
    donor_id: str
    iteration: int


@dataclass(frozen=True)
class YearlyBalanceCut:
    """``weight * renewable energy - demand >= gap_total`` over the whole horizon."""

    scenario_id: str
    supply_energy: tuple[tuple[str, float], ...]
    weight: float
    gap_total: float

    @property
    def key(self) -> str:
        return f"yearly:{self.scenario_id}"


@dataclass(frozen=True)
class LocalBalanceCut:
    """Renewable energy plus ``sigma`` covers demand in one period."""

    scenario_id: str
    start: int
    end: int
    supply_energy: tuple[tuple[str, float], ...]

    @property
    def period_id(self) -> str:
        return period_id(self.scenario_id, self.start, self.end)

    @property
    def key(self) -> str:
        return f"local:{self.period_id}"


@dataclass(frozen=True)
class PrefixH2Cut:
    """Initial H2 plus discounted surplus before ``start`` covers all sigmas so far."""

    scenario_id: str
    start: int
    prefix_supply: tuple[tuple[str, float], ...]
    sigma_ids: tuple[str, ...]

    @property
    def key(self) -> str:
        return f"prefix:{self.sigma_ids[-1]}"


@dataclass(frozen=True)
class LocalCapacityCut:
    """Renewables plus full-load CCGT (optionally battery) cover demand in a period."""

    scenario_id: str
    start: int
    end: int
    supply_energy: tuple[tuple[str, float], ...]
    include_battery: bool = False

    @property
    def key(self) -> str:
        return f"capacity:{period_id(self.scenario_id, self.start, self.end)}"


Cut = YearlyBalanceCut | LocalBalanceCut | PrefixH2Cut | LocalCapacityCut


@dataclass(frozen=True, eq=False)
class ModificationState:
    demand_additions: np.ndarray | None = None
    spliced_periods: tuple[Splice, ...] = ()
    extra_constraints: tuple[Cut, ...] = ()
    sigma_vars: Mapping[str, LocalBalanceCut] = field(default_factory=lambda: MappingProxyType({}))
    h2_end_bonus: float = 0.0
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.demand_additions is not None:
            add = np.array(self.demand_additions, dtype=float)
            if np.any(add < 0) or not np.all(np.isfinite(add)):
                raise ValueError("demand additions must be finite and >= 0")
            add.flags.writeable = False
            object.__setattr__(self, "demand_additions", add)
        if not isinstance(self.sigma_vars, MappingProxyType):
            object.__setattr__(self, "sigma_vars", MappingProxyType(dict(self.sigma_vars)))

    def additions(self, horizon: int) -> np.ndarray:
        if self.demand_additions is None:
            return np.zeros(horizon)
        if len(self.demand_additions) != horizon:
            raise SchemaError(
                f"demand additions cover {len(self.demand_additions)} hours, horizon is {horizon}"
            )
        return self.demand_additions

    def modified_demand(self, scenario: Scenario) -> np.ndarray:
        return scenario.demand + self.additions(scenario.horizon)

    def has_cut(self, key: str) -> bool:
        return any(c.key == key for c in self.extra_constraints)

    def _with_cut(self, cut: Cut) -> "ModificationState":
        kept = tuple(c for c in self.extra_constraints if c.key != cut.key)
        return replace(self, extra_constraints=kept + (cut,))

    def summary(self) -> dict:
        kinds: dict[str, int] = {}
        for c in self.extra_constraints:
            kinds[type(c).__name__] = kinds.get(type(c).__name__, 0) + 1
        return {
            "demand_added": float(np.sum(self.demand_additions)) if self.demand_additions is not None else 0.0,
            "splices": len(self.spliced_periods),
            "cuts": kinds,
            "sigma_vars": len(self.sigma_vars),
            "h2_end_bonus": self.h2_end_bonus,
        }


def smooth_uniform(delta: np.ndarray, half_width: int) -> np.ndarray:
    """Spread each hourly value evenly over ``[t - w, t + w]`` clipped to the horizon.

    Mass falling outside the horizon is redistributed over the clipped
    window, so the total is preserved.
    """
    delta = np.asarray(delta, dtype=float)
    n = len(delta)
    if half_width <= 0:
        return delta.copy()
    out = np.zeros(n)
    for t in np.flatnonzero(delta):
        lo, hi = max(t - half_width, 0), min(t + half_width, n - 1)
        out[lo : hi + 1] += delta[t] / (hi - lo + 1)
    return out


def mod1_demand_increase(
    state: ModificationState, gaps, smoothing: int | None = None
) -> ModificationState:
    """Add the hourly supply gaps (optionally smoothed) to the demand."""
    delta = np.asarray(getattr(gaps, "gaps", gaps), dtype=float)
    if np.any(delta < 0):
        raise ValueError("supply gaps must be >= 0")
    if not np.any(delta > 0):
        return state
    increment = smooth_uniform(delta, smoothing) if smoothing else delta
    return replace(state, demand_additions=state.additions(len(delta)) + increment)


def mod2_splice(
    state: ModificationState,
    ref_scenario: Scenario,
    donor_scenario: Scenario,
    period,
    iteration: int = 0,
) -> tuple[ModificationState, Scenario]:
    """Copy the donor's capacity factors in ``period`` into the reference data.

    Demand is never spliced. Overlap with an earlier splice raises
    :class:`SpliceOverlapError` and leaves ``state`` untouched.
    """
    start, end = _hours(period)
    if ref_scenario.horizon != donor_scenario.horizon:
        raise SchemaError("reference and donor horizons differ")
    if not 0 <= start <= end < ref_scenario.horizon:
        raise ValueError(f"period [{start}, {end}] outside horizon {ref_scenario.horizon}")
    for s in state.spliced_periods:
        if start <= s.end and s.start <= end:
            raise SpliceOverlapError(
                f"period [{start}, {end}] overlaps splice [{s.start}, {s.end}] from {s.donor_id}"
            )
    factors = {}
    for p, cf in ref_scenario.capacity_factors.items():
        if p not in donor_scenario.capacity_factors:
            raise SchemaError(f"donor {donor_scenario.year_id} lacks capacity factor {p}")
        new = cf.copy()
        new[start : end + 1] = donor_scenario.capacity_factors[p][start : end + 1]
        factors[p] = new
    synthetic = Scenario(ref_scenario.year_id, factors, ref_scenario.demand)
    splice = Splice(start, end, donor_scenario.year_id, iteration)
    return replace(state, spliced_periods=state.spliced_periods + (splice,)), synthetic


def mod3a_yearly_balance(
    state: ModificationState,
    scenario: Scenario,
    gap_total: float,
    loss_weight: float | None = None,
) -> ModificationState:
    """Require weighted renewable energy of ``scenario`` to exceed demand by ``gap_total``.

    One cut per scenario; registering again replaces the earlier one.
    """
    if gap_total < 0:
        raise ValueError("gap_total must be >= 0")
    weight = state.alpha if loss_weight is None else float(loss_weight)
    cut = YearlyBalanceCut(scenario.year_id, _energy(scenario, 0, scenario.horizon), weight, float(gap_total))
    return state._with_cut(cut)


def mod3b_local_h2(state: ModificationState, scenario: Scenario, period) -> ModificationState:
    start, end = _hours(period)
    if not 0 <= start <= end < scenario.horizon:
        raise ValueError(f"period [{start}, {end}] outside horizon {scenario.horizon}")
    cut = LocalBalanceCut(scenario.year_id, start, end, _energy(scenario, start, end + 1))
    if cut.period_id in state.sigma_vars:
        return state
    sigmas = dict(state.sigma_vars)
    sigmas[cut.period_id] = cut
    return replace(state._with_cut(cut), sigma_vars=MappingProxyType(sigmas))


def mod3_h2_prefix(
    state: ModificationState, scenario: Scenario, ordered_periods: Sequence
) -> ModificationState:
    """Register one cumulative H2 cut per period of ``scenario``.

    Replaces any prefix cuts registered earlier for the same scenario.
    """
    hours = [_hours(p) for p in ordered_periods]
    for (s0, e0), (s1, e1) in zip(hours, hours[1:]):
        if s1 <= e0:
            raise ValueError("periods must be sorted by start and pairwise disjoint")
    ids = [period_id(scenario.year_id, s, e) for s, e in hours]
    missing = [i for i in ids if i not in state.sigma_vars]
    if missing:
        raise ValueError(f"no sigma variable for periods {missing}")
    kept = tuple(
        c for c in state.extra_constraints
        if not (isinstance(c, PrefixH2Cut) and c.scenario_id == scenario.year_id)
    )
    cuts = tuple(
        PrefixH2Cut(scenario.year_id, start, _energy(scenario, 0, start), tuple(ids[: k + 1]))
        for k, (start, _) in enumerate(hours)
    )
    return replace(state, extra_constraints=kept + cuts)


def mod4_local_capacity(
    state: ModificationState, scenario: Scenario, period, include_battery: bool = False
) -> ModificationState:
    start, end = _hours(period)
    if not 0 <= start <= end < scenario.horizon:
        raise ValueError(f"period [{start}, {end}] outside horizon {scenario.horizon}")
    cut = LocalCapacityCut(scenario.year_id, start, end, _energy(scenario, start, end + 1), include_battery)
    if state.has_cut(cut.key):
        return state
    return state._with_cut(cut)


def mod6_global_h2(state: ModificationState, gap_total: float) -> ModificationState:
    """Raise the required end-of-horizon H2 level by ``gap_total``."""
    if gap_total < 0:
        raise ValueError("gap_total must be >= 0")
    return replace(state, h2_end_bonus=state.h2_end_bonus + float(gap_total))
