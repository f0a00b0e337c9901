"""Domain types for a single-node renewable energy system.

Units are fixed package-wide: power in MW, energy in MWh, money in EUR,
hourly resolution. Supply and conversion capacities are in MW, storage
capacities in MWh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np


class SchemaError(ValueError):
    """Input data does not match the expected shape or ranges."""


class InvalidParameterError(ValueError):
    pass


class InvalidDesignError(ValueError):
    pass


class Kind(str, Enum):
    SUPPLY = "supply"
    STORAGE = "storage"
    CONVERSION = "conversion"


class Carrier(str, Enum):
    ELECTRICITY = "electricity"
    HYDROGEN = "hydrogen"


@dataclass(frozen=True)
class Technology:
    kind: Kind
    capex: float
    opex_fix: float
    lifetime_years: float
    max_capacity: float
    conversion_in_eff: float | None = None
    conversion_out_eff: float | None = None
    self_discharge_per_hour: float = 0.0
    # storage medium; only meaningful for storage technologies
    carrier: Carrier = Carrier.ELECTRICITY
    # reporting class used by FLH statistics, e.g. "wind" or "pv"
    group: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "carrier", Carrier(self.carrier))
        if self.capex < 0 or self.opex_fix < 0:
            raise InvalidParameterError("capex and opex_fix must be >= 0")
        if not self.lifetime_years >= 1:
            raise InvalidParameterError(
                f"lifetime_years must be >= 1, got {self.lifetime_years}"
            )
        if not (self.max_capacity >= 0 and math.isfinite(self.max_capacity)):
            raise InvalidParameterError("max_capacity must be finite and >= 0")
        for eff in (self.conversion_in_eff, self.conversion_out_eff):
            if eff is not None and not 0 < eff <= 1:
                raise InvalidParameterError(f"efficiency {eff} outside (0, 1]")
        if not 0 <= self.self_discharge_per_hour < 1:
            raise InvalidParameterError("self_discharge_per_hour must be in [0, 1)")
        if self.kind is Kind.CONVERSION:
            if (self.conversion_in_eff is None) == (self.conversion_out_eff is None):
                raise InvalidParameterError(
                    "a conversion technology needs exactly one of "
                    "conversion_in_eff (electrolysis) or conversion_out_eff (CCGT)"
                )


class TechnologyCatalog:
    """Ordered, read-only map from technology id to :class:`Technology`.

    At most one technology per storage carrier and per conversion direction
    is supported. The hydrogen chain (electrolyser, H2 storage, CCGT) is
    either complete or absent.
    """

    def __init__(self, entries: Mapping[str, Technology]):
        self._entries = MappingProxyType(dict(entries))
        self.supply = tuple(k for k, t in self._entries.items() if t.kind is Kind.SUPPLY)
        self.battery = self._single(Kind.STORAGE, lambda t: t.carrier is Carrier.ELECTRICITY)
        self.h2_storage = self._single(Kind.STORAGE, lambda t: t.carrier is Carrier.HYDROGEN)
        self.electrolyser = self._single(
            Kind.CONVERSION, lambda t: t.conversion_in_eff is not None
        )
        self.ccgt = self._single(Kind.CONVERSION, lambda t: t.conversion_out_eff is not None)
        chain = (self.electrolyser, self.h2_storage, self.ccgt)
        if any(c is None for c in chain) and any(c is not None for c in chain):
            raise InvalidParameterError(
                "hydrogen chain must contain electrolyser, H2 storage and CCGT together"
            )
        if not self.supply:
            raise InvalidParameterError("catalog needs at least one supply technology")

    def _single(self, kind: Kind, pred) -> str | None:
        found = [k for k, t in self._entries.items() if t.kind is kind and pred(t)]
        if len(found) > 1:
            raise InvalidParameterError(f"more than one {kind.value} technology: {found}")
        return found[0] if found else None

    @property
    def has_hydrogen(self) -> bool:
        return self.ccgt is not None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def __getitem__(self, key: str) -> Technology:
        return self._entries[key]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: object) -> bool:
        return key in self._entries

    def items(self):
        return self._entries.items()

    def ccgt_efficiency(self) -> float:
        if self.ccgt is None:
            return 0.0
        return self._entries[self.ccgt].conversion_out_eff  # type: ignore[return-value]

    def electrolyser_efficiency(self) -> float:
        if self.electrolyser is None:
            return 0.0
        return self._entries[self.electrolyser].conversion_in_eff  # type: ignore[return-value]

    def replace(self, tech_id: str, **changes) -> "TechnologyCatalog":
        from dataclasses import replace

        entries = dict(self._entries)
        entries[tech_id] = replace(entries[tech_id], **changes)
        return TechnologyCatalog(entries)

    def __repr__(self) -> str:
        return f"TechnologyCatalog({list(self._entries)})"


def _readonly(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise SchemaError(f"{name} must be one-dimensional")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Scenario:
    """One weather year: hourly capacity factors per supply technology and demand."""

    year_id: str
    capacity_factors: Mapping[str, np.ndarray]
    demand: np.ndarray

    def __post_init__(self) -> None:
        demand = _readonly(self.demand, "demand")
        factors = {k: _readonly(v, f"capacity factor {k}") for k, v in self.capacity_factors.items()}
        n = len(demand)
        if n == 0:
            raise SchemaError("empty horizon")
        if not np.all(np.isfinite(demand)) or np.any(demand < 0):
            raise SchemaError(f"scenario {self.year_id}: demand must be finite and >= 0")
        for tech, cf in factors.items():
            if len(cf) != n:
                raise SchemaError(
                    f"scenario {self.year_id}: capacity factor {tech} has {len(cf)} "
                    f"entries, demand has {n}"
                )
            if not np.all(np.isfinite(cf)) or np.any(cf < 0) or np.any(cf > 1):
                raise SchemaError(f"scenario {self.year_id}: capacity factor {tech} outside [0, 1]")
        object.__setattr__(self, "year_id", str(self.year_id))
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "capacity_factors", MappingProxyType(factors))

    @property
    def horizon(self) -> int:
        return len(self.demand)

    def check_catalog(self, catalog: TechnologyCatalog) -> None:
        missing = [p for p in catalog.supply if p not in self.capacity_factors]
        if missing:
            raise SchemaError(f"scenario {self.year_id}: no capacity factors for {missing}")

    def with_demand(self, demand) -> "Scenario":
        return Scenario(self.year_id, self.capacity_factors, demand)


@dataclass(frozen=True)
class SystemDesign:
    capacities: Mapping[str, float]
    source: str = ""

    def __post_init__(self) -> None:
        caps = {k: float(v) for k, v in self.capacities.items()}
        object.__setattr__(self, "capacities", MappingProxyType(caps))

    def __getitem__(self, key: str) -> float:
        return self.capacities.get(key, 0.0)

    def scaled(self, factor: float) -> "SystemDesign":
        return SystemDesign({k: v * factor for k, v in self.capacities.items()}, self.source)

    def validate(self, catalog: TechnologyCatalog, atol: float = 1e-9) -> None:
        unknown = set(self.capacities) - set(catalog.ids)
        if unknown:
            raise InvalidDesignError(f"design has unknown technologies {sorted(unknown)}")
        for p, tech in catalog.items():
            value = self.capacities.get(p, 0.0)
            if not math.isfinite(value) or value < -atol or value > tech.max_capacity + atol:
                raise InvalidDesignError(
                    f"capacity of {p} = {value} outside [0, {tech.max_capacity}]"
                )


@dataclass(frozen=True)
class CostModel:
    annualization: str = "straight_line"
    discount_rate: float = 0.0
    shedding_penalty: float = 1e6

    def __post_init__(self) -> None:
        if self.annualization not in ("straight_line", "annuity"):
            raise InvalidParameterError(f"unknown annualization {self.annualization!r}")
        if not 0 <= self.discount_rate < 1:
            raise InvalidParameterError("discount_rate must be in [0, 1)")
        if not self.shedding_penalty > 0:
            raise InvalidParameterError("shedding_penalty must be positive")


def annuity_factor(rate: float, lifetime: float) -> float:
    if rate == 0:
        return 1.0 / lifetime
    growth = (1 + rate) ** lifetime
    return rate * growth / (growth - 1)


def annualize_cost(tech: Technology, cost_model: CostModel) -> float:
    """Yearly cost of one unit of capacity (investment share plus fixed OPEX)."""
    if not tech.lifetime_years >= 1:
        raise InvalidParameterError("lifetime_years must be >= 1")
    if cost_model.annualization == "annuity":
        return tech.capex * annuity_factor(cost_model.discount_rate, tech.lifetime_years) + tech.opex_fix
    return tech.capex / tech.lifetime_years + tech.opex_fix


def implied_energy_cost(catalog: TechnologyCatalog, cost_model: CostModel) -> float:
    """Largest yearly cost of capacity able to deliver one MWh within one hour."""
    worst = 0.0
    for tech in catalog._entries.values():
        cost = annualize_cost(tech, cost_model)
        if tech.conversion_out_eff is not None:
            cost /= tech.conversion_out_eff
        worst = max(worst, cost)
    return worst


def check_penalty(catalog: TechnologyCatalog, cost_model: CostModel) -> None:
    bound = implied_energy_cost(catalog, cost_model)
    if cost_model.shedding_penalty <= bound:
        raise InvalidParameterError(
            f"shedding penalty {cost_model.shedding_penalty} must exceed the largest "
            f"implied technology cost {bound}"
        )


def cost_breakdown(
    design: SystemDesign, catalog: TechnologyCatalog, cost_model: CostModel
) -> dict[str, float]:
    design.validate(catalog)
    return {p: annualize_cost(catalog[p], cost_model) * design[p] for p in catalog}


def total_annual_cost(design: SystemDesign, catalog: TechnologyCatalog, cost_model: CostModel) -> float:
    return math.fsum(cost_breakdown(design, catalog, cost_model).values())


def potential_supply_series(
    design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog
) -> np.ndarray:
    """Hourly generation with every supply and backup unit at full load."""
    scenario.check_catalog(catalog)
    supply = np.zeros(scenario.horizon)
    for p in catalog.supply:
        supply += scenario.capacity_factors[p] * design[p]
    if catalog.ccgt is not None:
        supply += catalog.ccgt_efficiency() * design[catalog.ccgt]
    return supply


def potential_supply(
    design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog, hour: int
) -> float:
    if not 0 <= hour < scenario.horizon:
        raise IndexError(f"hour {hour} outside horizon {scenario.horizon}")
    return float(potential_supply_series(design, scenario, catalog)[hour])


def full_load_hours(scenario: Scenario, techs=None) -> dict[str, float]:
    techs = scenario.capacity_factors.keys() if techs is None else techs
    return {p: float(np.sum(scenario.capacity_factors[p])) for p in techs}


# CAPEX in EUR/kW (EUR/kWh for storage), fixed OPEX per year, lifetime in years.
# Grid and pipeline rows are per km and only kept for reference; the
# single-node model has no network.
REFERENCE_PARAMETERS: dict[str, dict[str, float | str]] = {
    "pv_rooftop": {"capex": 474, "opex_fix": 10, "lifetime": 20, "unit": "kW"},
    "pv_openfield": {"capex": 320, "opex_fix": 5.4, "lifetime": 20, "unit": "kW"},
    "wind_onshore": {"capex": 1000, "opex_fix": 25, "lifetime": 20, "unit": "kW"},
    "wind_offshore": {"capex": 2530, "opex_fix": 63, "lifetime": 20, "unit": "kW"},
    "battery": {"capex": 131, "opex_fix": 3.3, "lifetime": 15, "unit": "kWh"},
    "salt_cavern": {"capex": 0.7, "opex_fix": 0.01, "lifetime": 40, "unit": "kWh"},
    "electricity_grid": {"capex": 0.86, "opex_fix": 0.03, "lifetime": 40, "unit": "kW km"},
    "h2_pipeline": {"capex": 0.185, "opex_fix": 0.01, "lifetime": 40, "unit": "kW km"},
    "electrolyser": {"capex": 350, "opex_fix": 11, "lifetime": 10, "unit": "kW"},
    "ccgt": {"capex": 760, "opex_fix": 23, "lifetime": 20, "unit": "kW"},
}

DEFAULT_ELECTROLYSER_EFF = 0.7
DEFAULT_CCGT_EFF = 0.6

_KINDS = {
    "pv_rooftop": (Kind.SUPPLY, "pv"),
    "pv_openfield": (Kind.SUPPLY, "pv"),
    "wind_onshore": (Kind.SUPPLY, "wind"),
    "wind_offshore": (Kind.SUPPLY, "wind"),
    "battery": (Kind.STORAGE, None),
    "salt_cavern": (Kind.STORAGE, None),
    "electrolyser": (Kind.CONVERSION, None),
    "ccgt": (Kind.CONVERSION, None),
}


def default_catalog(
    max_capacity: Mapping[str, float],
    technologies=None,
    electrolyser_eff: float = DEFAULT_ELECTROLYSER_EFF,
    ccgt_eff: float = DEFAULT_CCGT_EFF,
    battery_self_discharge: float = 0.0,
) -> TechnologyCatalog:
    """Catalog from the reference cost table, converted to EUR/MW and EUR/MWh.

    ``max_capacity`` must give a finite limit for every selected technology.
    """
    techs = list(_KINDS) if technologies is None else list(technologies)
    entries = {}
    for tech_id in techs:
        row = REFERENCE_PARAMETERS[tech_id]
        kind, group = _KINDS[tech_id]
        extra: dict = {}
        if tech_id == "salt_cavern":
            extra["carrier"] = Carrier.HYDROGEN
        if tech_id == "battery":
            extra["self_discharge_per_hour"] = battery_self_discharge
        if tech_id == "electrolyser":
            extra["conversion_in_eff"] = electrolyser_eff
        if tech_id == "ccgt":
            extra["conversion_out_eff"] = ccgt_eff
        entries[tech_id] = Technology(
            kind=kind,
            capex=1000.0 * float(row["capex"]),
            opex_fix=1000.0 * float(row["opex_fix"]),
            lifetime_years=float(row["lifetime"]),
            max_capacity=float(max_capacity[tech_id]),
            group=group,
            **extra,
        )
    return TechnologyCatalog(entries)
