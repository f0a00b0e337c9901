"""Time-series ingestion, run configuration, run artifacts and reports.

Scenario files are CSV with a header ``hour,cf_<tech>,...`` and one row per
hour starting at 0. Demand files use ``hour,demand``. A case directory holds
``demand.csv``, one ``scenario_<id>.csv`` per weather year and an optional
``config.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    DEFAULT_CCGT_EFF,
    DEFAULT_ELECTROLYSER_EFF,
    CostModel,
    Scenario,
    SchemaError,
    SystemDesign,
    TechnologyCatalog,
    cost_breakdown,
    default_catalog,
    total_annual_cost,
)
from .feasibility import DEFAULT_EPS_GAP_FRACTION, DEFAULT_EPS_HOUR
from .modifications import DEFAULT_SMOOTHING_WINDOW
from .critical_periods import DEFAULT_JOIN_DISTANCE

FORMAT_VERSION = 1
HOURS_PER_MONTH = 730  # 8760 / 12


# -- CSV ingestion -----------------------------------------------------------


def _read_table(handle: IO[str], what: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    reader = csv.reader(handle)
    header = None
    rows = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip() for c in row]
            continue
        rows.append((reader.line_num, row))
    if header is None:
        raise SchemaError(f"{what}: missing header row")
    if "hour" not in header:
        raise SchemaError(f"{what}: missing column 'hour'")
    if len(set(header)) != len(header):
        raise SchemaError(f"{what}: duplicate column names in header")
    return header, rows


def _parse_float(text: str, what: str, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"{what}: line {line}, column {column!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise SchemaError(f"{what}: line {line}, column {column!r}: value {text!r} is not finite")
    return value


def _columns(handle: IO[str], what: str, value_columns: Sequence[str]) -> tuple[dict[str, np.ndarray], list[int]]:
    """Parse ``value_columns``; also return the file line of every data row."""
    header, rows = _read_table(handle, what)
    out: dict[str, list[float]] = {c: [] for c in value_columns}
    hour_col = header.index("hour")
    positions = {c: header.index(c) for c in value_columns}
    for expected, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{what}: line {line}: expected {len(header)} fields, got {len(row)}")
        hour = _parse_float(row[hour_col], what, line, "hour")
        if hour != expected:
            raise SchemaError(f"{what}: line {line}: expected hour {expected}, got {row[hour_col]!r}")
        for c, pos in positions.items():
            out[c].append(_parse_float(row[pos], what, line, c))
    return {c: np.array(v, dtype=float) for c, v in out.items()}, [line for line, _ in rows]


def _check_range(
    values: np.ndarray, lines: list[int], what: str, column: str, lo: float, hi: float | None
) -> None:
    bad = np.flatnonzero((values < lo) | ((values > hi) if hi is not None else False))
    if len(bad):
        k = int(bad[0])
        raise SchemaError(
            f"{what}: line {lines[k]} (hour {k}), column {column!r}: value {float(values[k])!r} "
            f"outside [{lo}, {hi if hi is not None else 'inf'}]"
        )


def _materialize(source) -> tuple[io.StringIO, str]:
    """Read a path or stream fully so the header can be inspected before parsing."""
    if hasattr(source, "read"):
        return io.StringIO(source.read()), str(getattr(source, "name", "<stream>"))
    with open(source, newline="", encoding="utf-8") as fh:
        return io.StringIO(fh.read()), str(source)


def load_demand_csv(source) -> np.ndarray:
    buffer, label = _materialize(source)
    what = f"demand file {label}"
    header, _ = _read_table(buffer, what)
    if "demand" not in header:
        raise SchemaError(f"{what}: missing column 'demand'")
    buffer.seek(0)
    values, lines = _columns(buffer, what, ["demand"])
    demand = values["demand"]
    if len(demand) == 0:
        raise SchemaError(f"{what}: no data rows")
    _check_range(demand, lines, what, "demand", 0.0, None)
    return demand


def load_scenario_csv(source, year_id: str | None = None, demand=None) -> Scenario:
    """Read hourly capacity factors; ``demand`` defaults to zeros when omitted.

    ``year_id`` defaults to the file name without the ``scenario_`` prefix.
    """
    buffer, label = _materialize(source)
    what = f"scenario file {label}"
    header, _ = _read_table(buffer, what)
    buffer.seek(0)
    techs = [c for c in header if c.startswith("cf_")]
    extra = [c for c in header if c != "hour" and not c.startswith("cf_")]
    if extra:
        raise SchemaError(f"{what}: unexpected columns {extra}")
    if not techs:
        raise SchemaError(f"{what}: no capacity factor columns (cf_<tech>)")
    values, lines = _columns(buffer, what, techs)
    horizon = len(next(iter(values.values())))
    if horizon == 0:
        raise SchemaError(f"{what}: no data rows")
    for c, v in values.items():
        _check_range(v, lines, what, c, 0.0, 1.0)
    if demand is None:
        demand = np.zeros(horizon)
    demand = np.asarray(demand, dtype=float)
    if len(demand) != horizon:
        raise SchemaError(f"{what}: horizon {horizon} does not match demand length {len(demand)}")
    if year_id is None:
        stem = Path(label).stem if label != "<stream>" else "scenario"
        year_id = stem[len("scenario_"):] if stem.startswith("scenario_") else stem
    return Scenario(year_id, {c[3:]: v for c, v in values.items()}, demand)


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_scenario_csv(scenario: Scenario, path) -> None:
    """Write capacity factors at full precision (``repr``) so reading back is exact."""
    techs = sorted(scenario.capacity_factors)
    rows = (
        [str(t)] + [repr(float(scenario.capacity_factors[p][t])) for p in techs]
        for t in range(scenario.horizon)
    )
    _write_rows(path, ["hour"] + [f"cf_{p}" for p in techs], rows)


def write_demand_csv(demand, path) -> None:
    _write_rows(path, ["hour", "demand"], ([str(t), repr(float(v))] for t, v in enumerate(demand)))


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Declarative run configuration, stored as JSON.

    Keys: ``technologies`` (ids from the reference cost table),
    ``max_capacity`` (per technology), ``annualization``, ``discount_rate``,
    ``shedding_penalty`` (M), ``electrolyser_eff``, ``ccgt_eff``,
    ``battery_self_discharge``, ``alpha``, ``loss_weight``,
    ``eps_gap_fraction``, ``eps_hour``, ``smoothing_window``,
    ``join_distance``, ``padding``, ``max_iterations``, ``reference``,
    ``scenarios``, ``description``.
    """

    technologies: tuple[str, ...]
    max_capacity: Mapping[str, float]
    annualization: str = "straight_line"
    discount_rate: float = 0.0
    shedding_penalty: float = 1e6
    electrolyser_eff: float = DEFAULT_ELECTROLYSER_EFF
    ccgt_eff: float = DEFAULT_CCGT_EFF
    battery_self_discharge: float = 0.0
    alpha: float | None = None
    loss_weight: float | None = None
    eps_gap_fraction: float = DEFAULT_EPS_GAP_FRACTION
    eps_hour: float = DEFAULT_EPS_HOUR
    smoothing_window: int = DEFAULT_SMOOTHING_WINDOW
    join_distance: int = DEFAULT_JOIN_DISTANCE
    padding: int = 0
    max_iterations: int = 20
    reference: str | None = None
    scenarios: tuple[str, ...] | None = None
    description: str = ""

    def catalog(self) -> TechnologyCatalog:
        missing = [t for t in self.technologies if t not in self.max_capacity]
        if missing:
            raise SchemaError(f"config: no max_capacity for {missing}")
        return default_catalog(
            self.max_capacity,
            self.technologies,
            electrolyser_eff=self.electrolyser_eff,
            ccgt_eff=self.ccgt_eff,
            battery_self_discharge=self.battery_self_discharge,
        )

    def cost_model(self) -> CostModel:
        return CostModel(self.annualization, self.discount_rate, self.shedding_penalty)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["technologies"] = list(self.technologies)
        out["max_capacity"] = dict(self.max_capacity)
        if self.scenarios is not None:
            out["scenarios"] = list(self.scenarios)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SchemaError(f"config: unknown keys {unknown}")
        for key in ("technologies", "max_capacity"):
            if key not in data:
                raise SchemaError(f"config: missing key {key!r}")
        values = dict(data)
        values["technologies"] = tuple(values["technologies"])
        values["max_capacity"] = {k: float(v) for k, v in values["max_capacity"].items()}
        if values.get("scenarios") is not None:
            values["scenarios"] = tuple(values["scenarios"])
        try:
            return cls(**values)
        except TypeError as exc:
            raise SchemaError(f"config: {exc}") from None


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config {path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise SchemaError(f"config {path}: top level must be an object")
    return RunConfig.from_dict(data)


@dataclass(frozen=True)
class Case:
    config: RunConfig
    scenarios: Mapping[str, Scenario]


def load_case(directory) -> Case:
    """Load ``config.json``, ``demand.csv`` and every ``scenario_<id>.csv`` of a directory."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SchemaError(f"case directory {directory} does not exist")
    config_path = directory / "config.json"
    if not config_path.exists():
        raise SchemaError(f"{directory}: missing config.json")
    config = load_config(config_path)
    demand = load_demand_csv(directory / "demand.csv")
    scenarios = {}
    for path in sorted(directory.glob("scenario_*.csv")):
        s = load_scenario_csv(path, demand=demand)
        scenarios[s.year_id] = s
    if not scenarios:
        raise SchemaError(f"{directory}: no scenario_<id>.csv files")
    catalog = config.catalog()
    for s in scenarios.values():
        s.check_catalog(catalog)
    return Case(config, scenarios)


def load_fixture(name: str) -> Case:
    from .fixtures import FIXTURE_DIR

    return load_case(FIXTURE_DIR / name)


# -- statistics --------------------------------------------------------------


@dataclass(frozen=True)
class YearResult:
    year_id: str
    tac: float
    flh: Mapping[str, float]  # technology class -> full load hours
    cost_share: Mapping[str, float]  # technology class -> share of TAC


@dataclass(frozen=True)
class CorrelationStats:
    pearson_flh_wind_vs_tac: float | None
    pearson_flh_pv_vs_tac: float | None
    pearson_cost_share_wind_vs_tac: float | None
    pearson_cost_share_pv_vs_tac: float | None

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None and not -1.0 <= v <= 1.0:
                raise ValueError(f"{f.name} = {v} outside [-1, 1]")


def year_result(
    design: SystemDesign, scenario: Scenario, catalog: TechnologyCatalog, cost_model: CostModel
) -> YearResult:
    """TAC, class FLH (mean over the class's technologies) and class cost shares."""
    costs = cost_breakdown(design, catalog, cost_model)
    tac = total_annual_cost(design, catalog, cost_model)
    classes: dict[str, list[str]] = {}
    for p in catalog.supply:
        group = catalog[p].group or p
        classes.setdefault(group, []).append(p)
    flh = {g: float(np.mean([np.sum(scenario.capacity_factors[p]) for p in ps])) for g, ps in classes.items()}
    share = {g: (math.fsum(costs[p] for p in ps) / tac if tac > 0 else 0.0) for g, ps in classes.items()}
    return YearResult(scenario.year_id, tac, flh, share)


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Sample Pearson coefficient, ``None`` when either input has zero variance."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two sequences of equal length >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(np.dot(dx, dx)), float(np.dot(dy, dy))
    scale = max(float(np.max(np.abs(x))), 1.0) ** 2 * 1e-24, max(float(np.max(np.abs(y))), 1.0) ** 2 * 1e-24
    if sxx <= scale[0] * len(x) or syy <= scale[1] * len(y):
        return None
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def flh_correlation(per_year_results: Sequence[YearResult]) -> CorrelationStats:
    if len(per_year_results) < 3:
        raise ValueError("need at least 3 year results")
    tac = [r.tac for r in per_year_results]

    def corr(attr: str, group: str) -> float | None:
        values = [getattr(r, attr).get(group) for r in per_year_results]
        if any(v is None for v in values):
            return None
        return pearson(values, tac)

    return CorrelationStats(
        corr("flh", "wind"), corr("flh", "pv"), corr("cost_share", "wind"), corr("cost_share", "pv")
    )


# -- run artifacts -----------------------------------------------------------


@dataclass
class RunArtifact:
    """Everything a run produced, serialised as JSON at full precision.

    ``designs`` maps a design label (a year id for single-year optima,
    ``robust:<strategy>``, ``oracle``, ``primal_bound``) to capacities;
    ``gap_tables`` maps design label -> scenario -> hourly gaps;
    ``cost_breakdowns`` maps design label -> technology -> annual cost.
    """

    config_snapshot: dict
    designs: dict[str, dict[str, float]] = field(default_factory=dict)
    gap_tables: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    cost_breakdowns: dict[str, dict[str, float]] = field(default_factory=dict)
    correlation_stats: CorrelationStats | None = None
    demand: list[float] | None = None
    runs: dict[str, dict] = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_json(self) -> str:
        data = asdict(self)
        return json.dumps(data, indent=1, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "RunArtifact":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"artifact: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(data, dict) or "format_version" not in data:
            raise SchemaError("artifact: missing format_version")
        if data["format_version"] != FORMAT_VERSION:
            raise SchemaError(f"artifact: unsupported format_version {data['format_version']}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SchemaError(f"artifact: unknown keys {unknown}")
        stats = data.get("correlation_stats")
        if stats is not None:
            data["correlation_stats"] = CorrelationStats(**stats)
        return cls(**data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RunArtifact":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def add_design(
        self, label: str, design: SystemDesign, catalog: TechnologyCatalog, cost_model: CostModel
    ) -> None:
        self.designs[label] = dict(design.capacities)
        self.cost_breakdowns[label] = cost_breakdown(design, catalog, cost_model)

    def add_gaps(self, label: str, scenario_id: str, gaps) -> None:
        self.gap_tables.setdefault(label, {})[scenario_id] = [float(g) for g in np.asarray(gaps)]


# -- reports -----------------------------------------------------------------


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    v = float(value)
    if v == 0:
        return "0"
    return f"{v:.6g}"


def write_report(artifact: RunArtifact, out_dir) -> list[Path]:
    """Write plot-ready CSV tables and a summary; output is byte-deterministic."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    cost_rows = []
    for label in sorted(artifact.cost_breakdowns):
        costs = artifact.cost_breakdowns[label]
        total = math.fsum(costs.values())
        for tech in sorted(costs):
            capacity = artifact.designs.get(label, {}).get(tech)
            share = costs[tech] / total if total > 0 else 0.0
            cost_rows.append([label, tech, _fmt(capacity), _fmt(costs[tech]), _fmt(share)])
    path = out / "costs.csv"
    _write_rows(path, ["design", "technology", "capacity", "annual_cost", "cost_share"], cost_rows)
    written.append(path)

    gap_rows = []
    lol_rows = []
    demand = np.asarray(artifact.demand, dtype=float) if artifact.demand is not None else None
    for label in sorted(artifact.gap_tables):
        for sid in sorted(artifact.gap_tables[label]):
            gaps = np.asarray(artifact.gap_tables[label][sid], dtype=float)
            months = np.minimum(np.arange(len(gaps)) // HOURS_PER_MONTH, 11)
            for m in range(int(months[-1]) + 1 if len(gaps) else 0):
                gap_rows.append([label, sid, str(m + 1), _fmt(math.fsum(gaps[months == m]))])
            total = math.fsum(gaps)
            annual = float(np.sum(demand)) if demand is not None else None
            peak = float(np.max(gaps)) if len(gaps) else 0.0
            if demand is not None and len(demand) == len(gaps) and np.any(demand > 0):
                hourly = np.where(demand > 0, gaps / np.where(demand > 0, demand, 1.0), 0.0)
                peak_fraction = min(float(np.max(hourly)), 1.0)
            else:
                peak_fraction = None
            lol_rows.append([
                label, sid, _fmt(total),
                _fmt(min(total / annual, 1.0) if annual else None),
                _fmt(peak), _fmt(peak_fraction), str(int(np.sum(gaps > DEFAULT_EPS_HOUR))),
            ])
    path = out / "gaps_by_month.csv"
    _write_rows(path, ["design", "scenario", "month", "gap_energy"], gap_rows)
    written.append(path)
    path = out / "loss_of_load.csv"
    _write_rows(
        path,
        ["design", "scenario", "total_gap", "fraction_of_demand", "peak_hourly_gap",
         "peak_fraction_of_hourly_demand", "gap_hours"],
        lol_rows,
    )
    written.append(path)

    path = out / "correlations.csv"
    stats = artifact.correlation_stats
    corr_rows = [] if stats is None else [[f.name, _fmt(getattr(stats, f.name))] for f in fields(stats)]
    _write_rows(path, ["statistic", "value"], corr_rows)
    written.append(path)

    lines = [f"# Run report (format {artifact.format_version})", ""]
    lines.append("| design | total annual cost |")
    lines.append("|---|---|")
    for label in sorted(artifact.cost_breakdowns):
        lines.append(f"| {label} | {_fmt(math.fsum(artifact.cost_breakdowns[label].values()))} |")
    for name in sorted(artifact.runs):
        run = artifact.runs[name]
        lines += ["", f"## {name}", ""]
        for key in sorted(k for k, v in run.items() if not isinstance(v, (list, dict))):
            value = run[key]
            lines.append(f"- {key}: {_fmt(value) if isinstance(value, float) else value}")
    path = out / "summary.md"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(path)
    return written
