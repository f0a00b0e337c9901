"""LP solving on top of the HiGHS dual simplex shipped with scipy.

Every optimal answer is re-checked here: primal feasibility against the
original rows and bounds, and the primal/dual objective gap. A solve that
fails either check is reported as ``ERROR`` rather than ``OPTIMAL``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .lp import LpProblem

log = logging.getLogger(__name__)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    ERROR = "error"


class SolverError(RuntimeError):
    def __init__(self, message: str, solution: "Solution | None" = None):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-6
    optimality: float = 1e-6


@dataclass(frozen=True, eq=False)
class Solution:
    status: SolveStatus
    objective: float
    values: np.ndarray
    duals: np.ndarray | None = None
    max_violation: float = np.nan
    relative_gap: float = np.nan
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL

    def require_optimal(self, context: str = "") -> "Solution":
        if not self.optimal:
            where = f" ({context})" if context else ""
            raise SolverError(f"solve failed{where}: {self.status.value}: {self.message}", self)
        return self

    def tagged(self, problem: LpProblem, tag: str) -> np.ndarray:
        return self.values[problem.metadata[tag]]

    def value(self, problem: LpProblem, name: str) -> float:
        return float(self.values[problem.index(name)])


_STATUS = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.ITERATION_LIMIT,
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
    4: SolveStatus.ERROR,
}


def max_violation(problem: LpProblem, x: np.ndarray) -> float:
    """Largest absolute violation of any row or bound at ``x``."""
    worst = 0.0
    if problem.n_vars:
        worst = max(worst, float(np.max(np.maximum(problem.lower - x, 0.0), initial=0.0)))
        worst = max(worst, float(np.max(np.maximum(x - problem.upper, 0.0), initial=0.0)))
    if problem.n_rows:
        activity = problem.matrix @ x
        senses = np.array(problem.senses)
        diff = activity - problem.rhs
        viol = np.where(senses == ">=", -diff, np.where(senses == "<=", diff, np.abs(diff)))
        worst = max(worst, float(np.max(np.maximum(viol, 0.0))))
    return worst


class Solver:
    """Callable solving an :class:`LpProblem` to a verified :class:`Solution`."""

    def __init__(
        self,
        tol: Tolerances = Tolerances(),
        method: str = "highs-ds",
        time_limit: float | None = None,
    ):
        self.tol = tol
        self.method = method
        self.time_limit = time_limit

    def __call__(self, problem: LpProblem) -> Solution:
        return self.solve(problem)

    def solve(self, problem: LpProblem) -> Solution:
        problem.validate()
        senses = np.array(problem.senses)
        A = problem.matrix
        ge, le, eq = senses == ">=", senses == "<=", senses == "="
        ub_rows = np.flatnonzero(ge | le)
        sign = np.where(ge[ub_rows], -1.0, 1.0)
        A_ub = sp.diags(sign) @ A[ub_rows] if len(ub_rows) else None
        b_ub = sign * problem.rhs[ub_rows] if len(ub_rows) else None
        eq_rows = np.flatnonzero(eq)
        A_eq = A[eq_rows] if len(eq_rows) else None
        b_eq = problem.rhs[eq_rows] if len(eq_rows) else None
        bounds = np.column_stack([problem.lower, problem.upper]) if problem.n_vars else None
        options = {
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
            "presolve": True,
        }
        if self.time_limit is not None:
            options["time_limit"] = self.time_limit
        res = linprog(
            problem.objective,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=bounds,
            method=self.method,
            options=options,
        )
        status = _STATUS.get(res.status, SolveStatus.ERROR)
        if status is not SolveStatus.OPTIMAL:
            return Solution(status, np.nan, np.full(problem.n_vars, np.nan), message=res.message)

        x = np.asarray(res.x, dtype=float)
        duals = np.zeros(problem.n_rows)
        if len(ub_rows):
            duals[ub_rows] = sign * res.ineqlin.marginals
        if len(eq_rows):
            duals[eq_rows] = res.eqlin.marginals
        primal = float(problem.objective @ x)
        dual = _dual_objective(problem, duals, res)
        gap = abs(primal - dual) / max(1.0, abs(primal))
        viol = max_violation(problem, x)
        x.flags.writeable = False
        message = res.message
        if viol > self.tol.feasibility:
            status = SolveStatus.ERROR
            message = f"primal violation {viol:.3g} exceeds tolerance"
        elif gap > self.tol.optimality:
            status = SolveStatus.ERROR
            message = f"relative duality gap {gap:.3g} exceeds tolerance"
        if status is SolveStatus.ERROR:
            log.warning("solver check failed for %s: %s", problem.name, message)
        return Solution(status, primal, x, duals, viol, gap, message)


def _dual_objective(problem: LpProblem, duals: np.ndarray, res) -> float:
    total = float(problem.rhs @ duals) if problem.n_rows else 0.0
    for bound, marg in ((problem.lower, res.lower.marginals), (problem.upper, res.upper.marginals)):
        marg = np.asarray(marg, dtype=float)
        finite = np.isfinite(bound)
        total += float(bound[finite] @ marg[finite])
    return total


def solve(problem: LpProblem, tol: Tolerances = Tolerances()) -> Solution:
    return Solver(tol).solve(problem)
