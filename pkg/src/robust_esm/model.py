"""Capacity-expansion (CAPEX), feasibility (COMP) and multi-scenario LPs.

Variables of the operational block, per hour ``t`` of a horizon ``H``:

* ``s_el(t)``   battery level at the end of hour ``t``; hour ``-1`` wraps to ``H-1``
* ``s_h2(t)``   H2 level at the start of hour ``t``, ``t = 0..H``; ``s_h2(0)`` is
  the initial level and ``s_h2(H)`` the closing level
* ``h2_in(t)``  electricity fed to electrolysis
* ``h2_out(t)`` electricity produced by the CCGT
* ``shed(t)`` (CAPEX, penalised) or ``gap(t)`` (COMP, the objective)

Rows: hourly balance, forward H2 dynamics
``s_h2(t+1) = s_h2(t) + eff_in*h2_in(t) - h2_out(t)/eff_out``, storage levels
below storage capacity, ``h2_in <= x_electrolyser``,
``h2_out <= eff_out * x_ccgt`` and the cyclic H2 closure.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .domain import (
    CostModel,
    InvalidDesignError,
    Scenario,
    SchemaError,
    SystemDesign,
    TechnologyCatalog,
    annualize_cost,
    check_penalty,
)
from .lp import LpBuilder, LpProblem
from .modifications import (
    LocalBalanceCut,
    LocalCapacityCut,
    ModificationState,
    PrefixH2Cut,
    YearlyBalanceCut,
)

DEFAULT_MAX_VARIABLES = 250_000


class ProblemTooLargeError(ValueError):
    pass


def _add_capacity_vars(b: LpBuilder, catalog: TechnologyCatalog, cost_model: CostModel | None,
                       fixed: SystemDesign | None = None) -> dict[str, int]:
    x = {}
    for p, tech in catalog.items():
        if fixed is None:
            lo, up = 0.0, tech.max_capacity
            cost = annualize_cost(tech, cost_model)
        else:
            lo = up = min(max(fixed[p], 0.0), tech.max_capacity)
            cost = 0.0
        x[p] = b.add_var("x", f"x({p})", lo, up, cost)
    return x


def _add_operation(
    b: LpBuilder,
    x: Mapping[str, int],
    scenario: Scenario,
    catalog: TechnologyCatalog,
    demand: np.ndarray,
    slack: str,
    slack_cost: float,
    h2_end_bonus: float = 0.0,
    label: str = "",
) -> dict[str, np.ndarray]:
    """Add one scenario's operational variables and rows; return their indices.

    ``slack`` is ``"shed"``, ``"gap"`` or ``""`` (no slack on the balance).
    """
    H = scenario.horizon
    tag = (lambda t: f"{t}@{label}") if label else (lambda t: t)
    pre = f"{label}," if label else ""
    hours = range(H)
    idx: dict[str, np.ndarray] = {}

    if catalog.battery is not None:
        batt = catalog[catalog.battery]
        idx["s_el"] = b.add_vars(tag("s_el"), [f"s_el({pre}{t})" for t in hours], 0.0, batt.max_capacity)
    if catalog.has_hydrogen:
        eff_out = catalog.ccgt_efficiency()
        idx["s_h2"] = b.add_vars(
            tag("s_h2"), [f"s_h2({pre}{t})" for t in range(H + 1)], 0.0, catalog[catalog.h2_storage].max_capacity
        )
        idx["h2_in"] = b.add_vars(
            tag("h2_in"), [f"h2_in({pre}{t})" for t in hours], 0.0, catalog[catalog.electrolyser].max_capacity
        )
        idx["h2_out"] = b.add_vars(
            tag("h2_out"), [f"h2_out({pre}{t})" for t in hours], 0.0, eff_out * catalog[catalog.ccgt].max_capacity
        )
    if slack:
        idx[slack] = b.add_vars(tag(slack), [f"{slack}({pre}{t})" for t in hours], 0.0, demand, slack_cost)

    keep = 1.0 - (catalog[catalog.battery].self_discharge_per_hour if catalog.battery else 0.0)
    for t in hours:
        cols = [x[p] for p in catalog.supply]
        vals = [float(scenario.capacity_factors[p][t]) for p in catalog.supply]
        if "s_el" in idx:
            cols += [idx["s_el"][t - 1], idx["s_el"][t]]
            vals += [keep, -1.0]
        if catalog.has_hydrogen:
            cols += [idx["h2_out"][t], idx["h2_in"][t]]
            vals += [1.0, -1.0]
        if slack:
            cols.append(idx[slack][t])
            vals.append(1.0)
        b.add_row(f"balance({pre}{t})", cols, vals, ">=", float(demand[t]))

    if "s_el" in idx:
        xb = x[catalog.battery]
        for t in hours:
            b.add_row(f"cap_el({pre}{t})", [idx["s_el"][t], xb], [1.0, -1.0], "<=", 0.0)

    if catalog.has_hydrogen:
        eff_in = catalog.electrolyser_efficiency()
        s, hin, hout = idx["s_h2"], idx["h2_in"], idx["h2_out"]
        for t in hours:
            b.add_row(
                f"h2_dyn({pre}{t})",
                [s[t + 1], s[t], hin[t], hout[t]],
                [1.0, -1.0, -eff_in, 1.0 / eff_out],
                "=",
                0.0,
            )
        xs, xe, xc = x[catalog.h2_storage], x[catalog.electrolyser], x[catalog.ccgt]
        for t in range(H + 1):
            b.add_row(f"cap_h2({pre}{t})", [s[t], xs], [1.0, -1.0], "<=", 0.0)
        for t in hours:
            b.add_row(f"electrolysis({pre}{t})", [hin[t], xe], [1.0, -1.0], "<=", 0.0)
            b.add_row(f"ccgt({pre}{t})", [hout[t], xc], [1.0, -eff_out], "<=", 0.0)
        if h2_end_bonus > 0:
            b.add_row(f"h2_closure({label})" if label else "h2_closure", [s[H], s[0]], [1.0, -1.0], ">=", h2_end_bonus)
        else:
            b.add_row(f"h2_closure({label})" if label else "h2_closure", [s[H], s[0]], [1.0, -1.0], "=", 0.0)
    return idx


def _supply_terms(x: Mapping[str, int], catalog: TechnologyCatalog, energy, weight: float = 1.0):
    energy = dict(energy)
    missing = [p for p in catalog.supply if p not in energy]
    if missing:
        raise SchemaError(f"cut lacks capacity factors for {missing}")
    return [x[p] for p in catalog.supply], [weight * energy[p] for p in catalog.supply]


def _require_hydrogen(catalog: TechnologyCatalog, what: str) -> None:
    if not catalog.has_hydrogen:
        raise SchemaError(f"{what} needs electrolyser, H2 storage and CCGT in the catalog")


def _add_cuts(b, x, catalog, demand, mods: ModificationState, s_h2) -> None:
    sigma = {}
    eff_out = catalog.ccgt_efficiency()
    for pid, cut in mods.sigma_vars.items():
        _require_hydrogen(catalog, "local H2 cut")
        length = cut.end - cut.start + 1
        sigma[pid] = b.add_var("sigma", f"sigma({pid})", 0.0, length * eff_out * catalog[catalog.ccgt].max_capacity)
        b.add_row(f"sigma_cap({pid})", [sigma[pid], x[catalog.ccgt]], [1.0, -length * eff_out], "<=", 0.0)

    for cut in mods.extra_constraints:
        if isinstance(cut, YearlyBalanceCut):
            cols, vals = _supply_terms(x, catalog, cut.supply_energy, cut.weight)
            b.add_row(cut.key, cols, vals, ">=", cut.gap_total + float(np.sum(demand)))
        elif isinstance(cut, LocalBalanceCut):
            cols, vals = _supply_terms(x, catalog, cut.supply_energy)
            rhs = float(np.sum(demand[cut.start : cut.end + 1]))
            b.add_row(cut.key, cols + [sigma[cut.period_id]], vals + [1.0], ">=", rhs)
        elif isinstance(cut, PrefixH2Cut):
            _require_hydrogen(catalog, "H2 prefix cut")
            cols, vals = _supply_terms(x, catalog, cut.prefix_supply, mods.alpha)
            cols = cols + [s_h2[0]] + [sigma[i] for i in cut.sigma_ids]
            vals = vals + [1.0] + [-1.0] * len(cut.sigma_ids)
            rhs = mods.alpha * float(np.sum(demand[: cut.start]))
            b.add_row(cut.key, cols, vals, ">=", rhs)
        elif isinstance(cut, LocalCapacityCut):
            cols, vals = _supply_terms(x, catalog, cut.supply_energy)
            length = cut.end - cut.start + 1
            if catalog.ccgt is not None:
                cols.append(x[catalog.ccgt])
                vals.append(length * eff_out)
            if cut.include_battery and catalog.battery is not None:
                cols.append(x[catalog.battery])
                vals.append(1.0)
            rhs = float(np.sum(demand[cut.start : cut.end + 1]))
            b.add_row(cut.key, cols, vals, ">=", rhs)
        else:
            raise TypeError(f"unknown cut type {type(cut).__name__}")


def build_capex(
    scenario: Scenario,
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    mods: ModificationState | None = None,
) -> LpProblem:
    """Capacity-expansion LP on ``scenario`` with all modifications in ``mods``."""
    mods = ModificationState() if mods is None else mods
    scenario.check_catalog(catalog)
    check_penalty(catalog, cost_model)
    demand = mods.modified_demand(scenario)
    if mods.h2_end_bonus > 0:
        _require_hydrogen(catalog, "end-of-horizon H2 requirement")
    b = LpBuilder(f"capex_{scenario.year_id}")
    x = _add_capacity_vars(b, catalog, cost_model)
    idx = _add_operation(b, x, scenario, catalog, demand, "shed", cost_model.shedding_penalty, mods.h2_end_bonus)
    # cut demand terms use the unmodified demand: the cuts describe the true
    # scenario, so artificial MOD1 demand must not be counted twice
    _add_cuts(b, x, catalog, scenario.demand, mods, idx.get("s_h2"))
    return b.build()


def build_feasibility(design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog) -> LpProblem:
    """Fixed-design operation LP minimising the total supply gap."""
    scenario.check_catalog(catalog)
    design.validate(catalog)
    missing = [p for p in catalog if p not in design.capacities]
    if missing:
        raise InvalidDesignError(f"design lacks capacities for {missing}")
    b = LpBuilder(f"comp_{scenario.year_id}")
    x = _add_capacity_vars(b, catalog, None, fixed=design)
    _add_operation(b, x, scenario, catalog, scenario.demand, "gap", 1.0)
    return b.build()


def build_monolithic(
    scenarios: Sequence[Scenario],
    catalog: TechnologyCatalog,
    cost_model: CostModel = CostModel(),
    allow_shedding: bool = False,
    max_variables: int = DEFAULT_MAX_VARIABLES,
) -> LpProblem:
    """Shared capacities with one operational copy per scenario.

    Without shedding, the optimum is the cheapest design that operates every
    scenario with zero supply gap.
    """
    if not scenarios:
        raise ValueError("no scenarios")
    horizons = {s.horizon for s in scenarios}
    if len(horizons) != 1:
        raise SchemaError(f"scenarios have different horizons {sorted(horizons)}")
    ids = [s.year_id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise SchemaError("duplicate scenario ids")
    H = horizons.pop()
    per_scenario = H * (5 if catalog.has_hydrogen else 1) + (H if catalog.battery else 0) + 1
    estimate = len(catalog) + len(scenarios) * per_scenario
    if estimate > max_variables:
        raise ProblemTooLargeError(f"monolithic problem needs ~{estimate} variables, budget is {max_variables}")
    check_penalty(catalog, cost_model)
    b = LpBuilder("monolithic")
    x = _add_capacity_vars(b, catalog, cost_model)
    for s in scenarios:
        s.check_catalog(catalog)
        _add_operation(
            b, x, s, catalog, s.demand, "shed" if allow_shedding else "", cost_model.shedding_penalty, label=s.year_id
        )
    return b.build()


def design_from_solution(problem: LpProblem, values: np.ndarray, catalog: TechnologyCatalog,
                         source: str = "") -> SystemDesign:
    """Read capacities from a solved problem, clipped to ``[0, max_capacity]``."""
    caps = {}
    for p in catalog:
        v = float(values[problem.index(f"x({p})")])
        caps[p] = min(v, catalog[p].max_capacity) if v > 0 else 0.0
    return SystemDesign(caps, source)
