import json
import shutil

import pytest

from robust_esm.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_SOLVER, main
from robust_esm.fixtures import FIXTURE_DIR


@pytest.fixture
def case(tmp_path):
    target = tmp_path / "case"
    shutil.copytree(FIXTURE_DIR / "electrolyser_limited", target)
    return target


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_optimize_writes_artifact_and_lp(case, tmp_path, capsys):
    out = tmp_path / "out"
    code, io = run(["optimize", "--data", case, "--scenario", "e1", "--out", out,
                    "--export-lp", tmp_path / "m.lp", "--json-out", tmp_path / "r.json"], capsys)
    assert code == EXIT_OK
    printed = json.loads(io.out)
    assert printed["scenario"] == "e1" and printed["total_annual_cost"] > 0
    assert json.loads((tmp_path / "r.json").read_text()) == printed
    assert (out / "artifact.json").exists() and (out / "report" / "costs.csv").exists()
    assert (tmp_path / "m.lp").read_text().startswith("\\ Problem")


def test_robustify_converged_and_not(case, capsys):
    code, io = run(["robustify", "--data", case, "--strategy", "mod2"], capsys)
    assert code == EXIT_OK and json.loads(io.out)["converged"]
    code, io = run(["robustify", "--data", case, "--strategy", "mod4", "--max-iterations", "3"], capsys)
    assert code == EXIT_NOT_CONVERGED


def test_mod1s_alias(case, capsys):
    code, io = run(["robustify", "--fixture", "twin_lulls", "--strategy", "mod1s", "--scenarios", "w1"], capsys)
    assert code == EXIT_OK and json.loads(io.out)["strategy"] == "mod1_smoothed"


def test_feastest_exit_codes(case, tmp_path, capsys):
    design = tmp_path / "d.json"
    code, io = run(["optimize", "--data", case, "--scenario", "e1", "--json-out", design], capsys)
    code, io = run(["feastest", "--data", case, "--design", design, "--scenarios", "e1"], capsys)
    assert code == EXIT_OK and json.loads(io.out)["robust"]
    code, io = run(["feastest", "--data", case, "--design", design], capsys)
    assert code == EXIT_NOT_CONVERGED
    assert json.loads(io.out)["total_gaps"]["e2"] > 0


def test_oracle_and_report(case, tmp_path, capsys):
    out = tmp_path / "run"
    code, io = run(["oracle", "--data", case, "--out", out], capsys)
    assert code == EXIT_OK
    result = json.loads(io.out)
    assert result["dual_bound"] <= result["total_annual_cost"] * (1 + 1e-6)
    assert result["total_annual_cost"] <= result["primal_bound"] * (1 + 1e-6)
    shutil.rmtree(out / "report")
    code, io = run(["report", "--run", out], capsys)
    assert code == EXIT_OK
    assert (out / "report" / "correlations.csv").read_text().count("\n") == 5


def test_input_errors(case, tmp_path, capsys):
    assert run(["optimize", "--data", tmp_path / "missing", "--scenario", "e1"], capsys)[0] == EXIT_INPUT
    assert run(["optimize", "--data", case, "--scenario", "zz"], capsys)[0] == EXIT_INPUT
    (case / "scenario_e2.csv").write_text("hour,cf_pv_openfield,cf_wind_onshore\n0,0.1,7\n")
    code, io = run(["optimize", "--data", case, "--scenario", "e1"], capsys)
    assert code == EXIT_INPUT and "line 2" in io.err
    assert run(["report", "--run", tmp_path / "nothing"], capsys)[0] == EXIT_INPUT


def test_bad_design_file(case, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(["feastest", "--data", case, "--design", bad], capsys)[0] == EXIT_INPUT
    bad.write_text(json.dumps({"ccgt": 1e9}))
    assert run(["feastest", "--data", case, "--design", bad], capsys)[0] == EXIT_INPUT


def test_solver_failure_exit_code(case, capsys, monkeypatch):
    from robust_esm import solver as solver_mod
    from robust_esm.solver import Solution, SolveStatus

    def broken(self, problem):
        return Solution(SolveStatus.ERROR, float("nan"), [0.0] * problem.n_vars, message="forced")

    monkeypatch.setattr(solver_mod.Solver, "solve", broken)
    assert run(["optimize", "--data", case, "--scenario", "e1"], capsys)[0] == EXIT_SOLVER


def test_unknown_strategy_rejected(case):
    with pytest.raises(SystemExit):
        main(["robustify", "--data", str(case), "--strategy", "mod5"])
