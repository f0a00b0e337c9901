"""Two-stage robust capacity-expansion planning for a single-node energy system."""

from .critical_periods import CriticalPeriod, cluster_gap_hours, rank_candidate_periods
from .dataio import (
    CorrelationStats,
    RunArtifact,
    RunConfig,
    flh_correlation,
    load_case,
    load_demand_csv,
    load_fixture,
    load_scenario_csv,
    write_report,
)
from .domain import (
    CostModel,
    Scenario,
    SchemaError,
    SystemDesign,
    Technology,
    TechnologyCatalog,
    default_catalog,
    potential_supply,
    total_annual_cost,
)
from .feasibility import RobustnessReport, SupplyGapSeries, is_robust, loss_of_load_summary, test_feasibility
from .lp import LpProblem
from .lpfile import export_lp_file, parse_lp_file
from .model import build_capex, build_feasibility, build_monolithic
from .modifications import ModificationState
from .robustify import (
    RobustifyConfig,
    RobustifyResult,
    dual_bound,
    oracle_monolithic,
    optimize_design,
    primal_bound_design,
    robustify,
)
from .solver import Solution, SolveStatus, Solver, SolverError

__version__ = "0.1.0"

__all__ = [
    "build_capex",
    "build_feasibility",
    "build_monolithic",
    "cluster_gap_hours",
    "CorrelationStats",
    "CostModel",
    "CriticalPeriod",
    "default_catalog",
    "dual_bound",
    "export_lp_file",
    "flh_correlation",
    "is_robust",
    "load_case",
    "load_demand_csv",
    "load_fixture",
    "load_scenario_csv",
    "loss_of_load_summary",
    "LpProblem",
    "ModificationState",
    "optimize_design",
    "oracle_monolithic",
    "parse_lp_file",
    "potential_supply",
    "primal_bound_design",
    "rank_candidate_periods",
    "robustify",
    "RobustifyConfig",
    "RobustifyResult",
    "RobustnessReport",
    "RunArtifact",
    "RunConfig",
    "Scenario",
    "SchemaError",
    "Solution",
    "Solver",
    "SolverError",
    "SolveStatus",
    "SupplyGapSeries",
    "SystemDesign",
    "Technology",
    "TechnologyCatalog",
    "test_feasibility",
    "total_annual_cost",
    "write_report",
]
