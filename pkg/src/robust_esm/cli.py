"""Command-line interface.

Exit codes: 0 success (robust / converged), 2 not converged or not robust,
3 input error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataio import Case, RunArtifact, load_case, load_fixture, write_report, year_result, flh_correlation
from .domain import InvalidDesignError, InvalidParameterError, SchemaError, SystemDesign, total_annual_cost
from .feasibility import eps_gap_for, is_robust
from .lpfile import LpFormatError, export_lp_file
from .model import build_capex, build_feasibility, build_monolithic
from .robustify import (
    RobustifyConfig,
    dual_bound,
    oracle_monolithic,
    optimize_design,
    primal_bound_design,
    record_to_dict,
    robustify,
)
from .solver import Solver, SolverError

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3, 4

STRATEGY_ALIASES = {"mod1s": "mod1_smoothed"}

log = logging.getLogger("robust_esm")


def _case(args) -> Case:
    if args.fixture:
        return load_fixture(args.fixture)
    if args.data:
        return load_case(args.data)
    raise SchemaError("give --data DIR or --fixture NAME")


def _select(case: Case, ids) -> list:
    ids = ids or list(case.config.scenarios or case.scenarios)
    missing = [i for i in ids if i not in case.scenarios]
    if missing:
        raise SchemaError(f"unknown scenarios {missing}; available: {sorted(case.scenarios)}")
    return [case.scenarios[i] for i in ids]


def _write_lp(path: str | None, problem, suffix: str = "") -> None:
    if not path:
        return
    target = Path(path)
    if suffix:
        target = target.with_name(f"{target.stem}_{suffix}{target.suffix or '.lp'}")
    target.write_text(export_lp_file(problem), encoding="utf-8")


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n", encoding="utf-8")
    print(text)


def _finish_artifact(args, artifact: RunArtifact) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        artifact.save(out / "artifact.json")
        write_report(artifact, out / "report")


def cmd_optimize(args) -> int:
    case = _case(args)
    cfg = case.config
    catalog, cost_model = cfg.catalog(), cfg.cost_model()
    (scenario,) = _select(case, [args.scenario])
    _write_lp(args.export_lp, build_capex(scenario, catalog, cost_model))
    design = optimize_design(scenario, catalog, cost_model)
    artifact = RunArtifact(cfg.to_dict(), demand=[float(v) for v in scenario.demand])
    artifact.add_design(scenario.year_id, design, catalog, cost_model)
    _finish_artifact(args, artifact)
    _emit(args, {"scenario": scenario.year_id, "capacities": dict(design.capacities),
                 "total_annual_cost": total_annual_cost(design, catalog, cost_model)})
    return EXIT_OK


def _load_design(path: str) -> SystemDesign:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"design file {path}: invalid JSON: {exc.msg}") from None
    caps = data.get("capacities", data) if isinstance(data, dict) else None
    if not isinstance(caps, dict):
        raise SchemaError(f"design file {path}: expected an object of capacities")
    return SystemDesign({k: float(v) for k, v in caps.items()}, Path(path).stem)


def cmd_feastest(args) -> int:
    case = _case(args)
    cfg = case.config
    catalog = cfg.catalog()
    design = _load_design(args.design)
    design.validate(catalog)
    scenarios = _select(case, args.scenarios)
    if args.export_lp:
        for s in scenarios:
            _write_lp(args.export_lp, build_feasibility(design, s, catalog), s.year_id if len(scenarios) > 1 else "")
    eps = eps_gap_for(scenarios[0], cfg.eps_gap_fraction)
    report = is_robust(design, scenarios, catalog, eps)
    if report.indeterminate:
        raise SolverError(f"feasibility tests failed: {dict(report.errors)}")
    _emit(args, {"robust": report.robust, "eps_gap": eps,
                 "total_gaps": {sid: g.total for sid, g in report.per_year.items()}})
    return EXIT_OK if report.robust else EXIT_NOT_CONVERGED


def cmd_robustify(args) -> int:
    case = _case(args)
    cfg = case.config
    catalog, cost_model = cfg.catalog(), cfg.cost_model()
    scenarios = _select(case, args.scenarios)
    ids = tuple(s.year_id for s in scenarios)
    reference = args.reference or cfg.reference or ids[0]
    config = RobustifyConfig(
        strategy=STRATEGY_ALIASES.get(args.strategy, args.strategy),
        reference_scenario=reference,
        scenario_set=ids,
        max_iterations=args.max_iterations or cfg.max_iterations,
        eps_gap_fraction=cfg.eps_gap_fraction,
        eps_hour=cfg.eps_hour,
        smoothing_window=cfg.smoothing_window,
        join_distance=cfg.join_distance,
        padding=cfg.padding,
        alpha=cfg.alpha,
        loss_weight=cfg.loss_weight,
    )
    result = robustify(config, case.scenarios, catalog, cost_model)
    if args.export_lp:
        _write_lp(args.export_lp, build_capex(result.reference_data, catalog, cost_model, result.state))
    label = f"robust:{config.strategy}"
    artifact = RunArtifact(cfg.to_dict(), demand=[float(v) for v in scenarios[0].demand])
    artifact.add_design(label, result.design, catalog, cost_model)
    for sid, gaps in result.last_report.per_year.items():
        artifact.add_gaps(label, sid, gaps.gaps)
    artifact.runs[label] = {
        "converged": result.converged,
        "iterations": result.iterations,
        "cost_trajectory": list(result.cost_trajectory),
        "final_cost": result.cost,
        "eps_gap": result.eps_gap,
        "modification_log": [record_to_dict(r) for r in result.modification_log],
    }
    _finish_artifact(args, artifact)
    _emit(args, {"strategy": config.strategy, "converged": result.converged, "iterations": result.iterations,
                 "capacities": dict(result.design.capacities), "total_annual_cost": result.cost,
                 "final_gaps": dict(result.final_gaps)})
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_oracle(args) -> int:
    case = _case(args)
    cfg = case.config
    catalog, cost_model = cfg.catalog(), cfg.cost_model()
    scenarios = _select(case, args.scenarios)
    _write_lp(args.export_lp, build_monolithic(scenarios, catalog, cost_model, max_variables=args.max_variables))
    solver = Solver()
    oracle = oracle_monolithic(scenarios, catalog, cost_model, solver, max_variables=args.max_variables)
    singles = {s.year_id: optimize_design(s, catalog, cost_model, solver=solver) for s in scenarios}
    costs = {k: total_annual_cost(d, catalog, cost_model) for k, d in singles.items()}
    primal = primal_bound_design(singles)
    artifact = RunArtifact(cfg.to_dict(), demand=[float(v) for v in scenarios[0].demand])
    for sid, d in singles.items():
        artifact.add_design(sid, d, catalog, cost_model)
    artifact.add_design("oracle", oracle, catalog, cost_model)
    artifact.add_design("primal_bound", primal, catalog, cost_model)
    if len(scenarios) >= 3:
        by_id = {s.year_id: s for s in scenarios}
        artifact.correlation_stats = flh_correlation(
            [year_result(d, by_id[sid], catalog, cost_model) for sid, d in singles.items()]
        )
    _finish_artifact(args, artifact)
    _emit(args, {
        "capacities": dict(oracle.capacities),
        "total_annual_cost": total_annual_cost(oracle, catalog, cost_model),
        "dual_bound": dual_bound(costs),
        "primal_bound": total_annual_cost(primal, catalog, cost_model),
        "single_year_costs": costs,
    })
    return EXIT_OK


def cmd_report(args) -> int:
    run = Path(args.run)
    path = run / "artifact.json" if run.is_dir() else run
    if not path.exists():
        raise SchemaError(f"no artifact at {path}")
    artifact = RunArtifact.load(path)
    out = Path(args.out) if args.out else (path.parent / "report")
    for written in write_report(artifact, out):
        print(written)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust-esm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenarios: bool = True):
        p.add_argument("--data", help="case directory with config.json, demand.csv, scenario_<id>.csv")
        p.add_argument("--fixture", help="name of a shipped fixture instead of --data")
        p.add_argument("--export-lp", metavar="PATH", help="write the LP in CPLEX LP format")
        p.add_argument("--out", help="directory for artifact.json and report/")
        p.add_argument("--json-out", metavar="PATH", help="also write the printed JSON here")
        if scenarios:
            p.add_argument("--scenarios", nargs="+", metavar="ID", help="scenario ids (default: all)")

    p = sub.add_parser("optimize", help="single-year capacity expansion")
    common(p, scenarios=False)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("feastest", help="test a design against scenarios")
    common(p)
    p.add_argument("--design", required=True, help="JSON file with capacities")
    p.set_defaults(func=cmd_feastest)

    p = sub.add_parser("robustify", help="iterate until the design is robust")
    common(p)
    p.add_argument("--strategy", required=True,
                   choices=["mod1", "mod1s", "mod1_smoothed", "mod2", "mod3", "mod4", "mod6"])
    p.add_argument("--reference", help="reference scenario id")
    p.add_argument("--max-iterations", type=int)
    p.set_defaults(func=cmd_robustify)

    p = sub.add_parser("oracle", help="exact multi-scenario optimum and bounds")
    common(p)
    p.add_argument("--max-variables", type=int, default=250_000)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="write CSV tables from a run directory")
    p.add_argument("--run", required=True, help="run directory or artifact.json")
    p.add_argument("--out", help="output directory (default: <run>/report)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (SchemaError, InvalidParameterError, InvalidDesignError, LpFormatError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
