import numpy as np
import pytest

from oracles import vertex_enumeration
from robust_esm import SolveStatus, Solver, export_lp_file, parse_lp_file
from robust_esm.lp import LpBuilder, MalformedProblemError, from_dense
from robust_esm.lpfile import MAX_NAME, sanitize_name
from robust_esm.solver import solve


def random_lp(rng, n=None, m=None):
    n = n or int(rng.integers(1, 5))
    m = m or int(rng.integers(1, 5))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    A[np.arange(m), rng.integers(0, n, size=m)] = rng.choice([-1.0, 1.0], size=m) * rng.integers(1, 6, size=m)
    b = rng.integers(-3, 15, size=m).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    lo = rng.integers(-3, 1, size=n).astype(float)
    hi = lo + rng.integers(1, 6, size=n)
    return c, A, b, lo, hi


def test_trivial_lower_bound():
    sol = solve(from_dense([1.0], [[1.0]], [">="], [3.0], [0.0], [10.0]))
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(3.0)


def test_infeasible():
    p = from_dense([-1.0], [[1.0], [1.0]], [">=", "<="], [5.0, 2.0])
    assert solve(p).status is SolveStatus.INFEASIBLE


def test_unbounded():
    assert solve(from_dense([-1.0])).status is SolveStatus.UNBOUNDED


def test_require_optimal_raises():
    from robust_esm import SolverError

    with pytest.raises(SolverError):
        solve(from_dense([-1.0])).require_optimal("test")


def test_malformed_problem():
    b = LpBuilder("bad")
    b.add_var("x", "x", 2.0, 1.0)
    with pytest.raises(MalformedProblemError):
        b.build().validate()


@pytest.mark.parametrize("seed", range(40))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    c, A, b, lo, hi = random_lp(rng, n=int(rng.integers(1, 7)), m=int(rng.integers(1, 4)))
    expected = vertex_enumeration(c, A, b, lo, hi)
    sol = solve(from_dense(c, A, ["<="] * len(b), b, lo, hi))
    if expected is None:
        assert sol.status is SolveStatus.INFEASIBLE
    else:
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(expected, abs=1e-7)
        assert sol.max_violation <= 1e-7


def test_deterministic():
    rng = np.random.default_rng(7)
    c, A, b, lo, hi = random_lp(rng, 4, 3)
    p = from_dense(c, A, ["<="] * 3, b, lo, hi)
    assert np.array_equal(solve(p).values, solve(p).values)


def test_single_variable_file_has_one_bounds_line():
    text = export_lp_file(from_dense([1.0], [[1.0]], [">="], [3.0], [0.0], [10.0]))
    body = text.split("Bounds\n")[1].split("End")[0].strip().splitlines()
    assert body == ["0 <= v0 <= 10.0"]


def test_no_constraints_file():
    text = export_lp_file(from_dense([1.0, 2.0]))
    assert "Subject To" not in text
    assert parse_lp_file(text).n_rows == 0


def test_long_names_sanitized_deterministically():
    name = "x(" + "a b" * 200 + ")"
    assert sanitize_name(name) == sanitize_name(name)
    assert len(sanitize_name(name)) <= MAX_NAME
    assert sanitize_name("end") != "end"
    assert sanitize_name("3x")[0] == "_"


@pytest.mark.parametrize("seed", range(20))
def test_round_trip_matches_direct_solve(seed):
    rng = np.random.default_rng(100 + seed)
    c, A, b, lo, hi = random_lp(rng)
    senses = list(rng.choice(["<=", ">=", "="], size=len(b)))
    p = from_dense(c, A, senses, b, lo, hi)
    direct = solve(p)
    back = solve(parse_lp_file(export_lp_file(p)))
    assert back.status is direct.status
    if direct.optimal:
        assert back.objective == pytest.approx(direct.objective, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_exported_file_readable_by_highs(seed, tmp_path):
    highspy = pytest.importorskip("highspy")
    rng = np.random.default_rng(500 + seed)
    c, A, b, lo, hi = random_lp(rng)
    p = from_dense(c, A, ["<="] * len(b), b, lo, hi)
    direct = solve(p)
    path = tmp_path / "p.lp"
    path.write_text(export_lp_file(p))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    status = h.getModelStatus()
    if direct.optimal:
        assert status == highspy.HighsModelStatus.kOptimal
        assert h.getInfo().objective_function_value == pytest.approx(direct.objective, abs=1e-7)
    else:
        assert status != highspy.HighsModelStatus.kOptimal


def test_solver_callable():
    assert Solver()(from_dense([1.0], lower=[2.0], upper=[4.0])).objective == pytest.approx(2.0)
