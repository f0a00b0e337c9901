"""Sparse linear program container shared by the model builders and the solver."""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

SENSES = (">=", "<=", "=")


class MalformedProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coefficients: Mapping[int, float]
    sense: str
    rhs: float


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``min objective @ x`` subject to ``matrix @ x (sense) rhs`` and bounds.

    ``metadata`` maps a tag (``"x"``, ``"s_el"``, ...) to the indices of the
    variables carrying it; tags partition the variable set.
    """

    var_names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray
    objective: np.ndarray
    matrix: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    row_names: tuple[str, ...]
    metadata: Mapping[str, np.ndarray]
    name: str = "lp"

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def variables(self) -> list[Variable]:
        return [Variable(n, float(lo), float(up)) for n, lo, up in zip(self.var_names, self.lower, self.upper)]

    @property
    def constraints(self) -> list[Constraint]:
        out = []
        for i in range(self.n_rows):
            start, stop = self.matrix.indptr[i], self.matrix.indptr[i + 1]
            coefs = dict(zip(self.matrix.indices[start:stop].tolist(), self.matrix.data[start:stop].tolist()))
            out.append(Constraint(self.row_names[i], coefs, self.senses[i], float(self.rhs[i])))
        return out

    def index(self, name: str) -> int:
        try:
            return self._name_index[name]
        except AttributeError:
            object.__setattr__(self, "_name_index", {n: i for i, n in enumerate(self.var_names)})
            return self._name_index[name]

    def validate(self) -> None:
        n = self.n_vars
        if not (len(self.lower) == len(self.upper) == len(self.objective) == n):
            raise MalformedProblemError("bound/objective vectors do not match the variable count")
        if self.matrix.shape != (self.n_rows, n):
            raise MalformedProblemError(f"matrix shape {self.matrix.shape} != ({self.n_rows}, {n})")
        if len(self.senses) != self.n_rows or len(self.rhs) != self.n_rows:
            raise MalformedProblemError("sense/rhs vectors do not match the row count")
        if any(s not in SENSES for s in self.senses):
            raise MalformedProblemError("unknown constraint sense")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)) or np.any(self.lower > self.upper):
            raise MalformedProblemError("variable with lower > upper or NaN bound")
        if not np.all(np.isfinite(self.objective)) or not np.all(np.isfinite(self.rhs)):
            raise MalformedProblemError("non-finite objective or right-hand side")
        if not np.all(np.isfinite(self.matrix.data)):
            raise MalformedProblemError("non-finite matrix coefficient")
        if self.n_rows and np.any(np.diff(self.matrix.indptr) == 0):
            empty = int(np.flatnonzero(np.diff(self.matrix.indptr) == 0)[0])
            raise MalformedProblemError(f"empty constraint row {self.row_names[empty]!r}")
        if len(set(self.var_names)) != n:
            raise MalformedProblemError("duplicate variable names")
        seen = np.zeros(n, dtype=int)
        for idx in self.metadata.values():
            np.add.at(seen, idx, 1)
        if self.metadata and np.any(seen != 1):
            raise MalformedProblemError("metadata tags do not partition the variables")


class LpBuilder:
    """Incremental assembly of an :class:`LpProblem` from COO triplets."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self._names: list[str] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._cost: list[float] = []
        self._tags: dict[str, list[int]] = {}
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return len(self._row_names)

    def add_var(self, tag: str, name: str, lower: float = 0.0, upper: float = np.inf, cost: float = 0.0) -> int:
        idx = len(self._names)
        self._names.append(name)
        self._lower.append(float(lower))
        self._upper.append(float(upper))
        self._cost.append(float(cost))
        self._tags.setdefault(tag, []).append(idx)
        return idx

    def add_vars(self, tag: str, names: Sequence[str], lower, upper, cost=0.0) -> np.ndarray:
        k = len(names)
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (k,))
        upper = np.broadcast_to(np.asarray(upper, dtype=float), (k,))
        cost = np.broadcast_to(np.asarray(cost, dtype=float), (k,))
        start = len(self._names)
        self._names.extend(names)
        self._lower.extend(lower.tolist())
        self._upper.extend(upper.tolist())
        self._cost.extend(cost.tolist())
        idx = list(range(start, start + k))
        self._tags.setdefault(tag, []).extend(idx)
        return np.array(idx, dtype=int)

    def add_row(self, name: str, cols: Iterable[int], vals: Iterable[float], sense: str, rhs: float) -> int | None:
        """Append a row; explicit zero coefficients are dropped.

        A row left without coefficients is skipped when ``0 sense rhs`` holds
        and rejected otherwise.
        """
        if sense not in SENSES:
            raise MalformedProblemError(f"unknown sense {sense!r}")
        merged: dict[int, float] = {}
        for c, v in zip(cols, vals):
            merged[int(c)] = merged.get(int(c), 0.0) + float(v)
        merged = {c: v for c, v in merged.items() if v != 0.0}
        if not merged:
            ok = {">=": 0 >= rhs, "<=": 0 <= rhs, "=": rhs == 0}[sense]
            if ok:
                return None
            raise MalformedProblemError(f"row {name!r} has no variables and cannot hold")
        r = len(self._row_names)
        for c, v in merged.items():
            self._rows.append(r)
            self._cols.append(c)
            self._vals.append(v)
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return r

    def build(self) -> LpProblem:
        n = len(self._names)
        matrix = sp.csr_matrix(
            (np.array(self._vals, dtype=float), (np.array(self._rows, dtype=int), np.array(self._cols, dtype=int))),
            shape=(len(self._row_names), n),
        )
        matrix.sort_indices()
        metadata = MappingProxyType({k: _frozen(np.array(v, dtype=int)) for k, v in self._tags.items()})
        problem = LpProblem(
            var_names=tuple(self._names),
            lower=_frozen(np.array(self._lower, dtype=float)),
            upper=_frozen(np.array(self._upper, dtype=float)),
            objective=_frozen(np.array(self._cost, dtype=float)),
            matrix=matrix,
            senses=tuple(self._senses),
            rhs=_frozen(np.array(self._rhs, dtype=float)),
            row_names=tuple(self._row_names),
            metadata=metadata,
            name=self.name,
        )
        problem.validate()
        return problem


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def from_dense(
    objective,
    rows=(),
    senses=(),
    rhs=(),
    lower=None,
    upper=None,
    names=None,
    name: str = "lp",
) -> LpProblem:
    """Convenience constructor for small hand-written problems."""
    objective = np.asarray(objective, dtype=float)
    n = len(objective)
    b = LpBuilder(name)
    lower = np.zeros(n) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    names = [f"v{i}" for i in range(n)] if names is None else names
    b.add_vars("var", names, lower, upper, objective)
    for i, (row, sense, value) in enumerate(zip(rows, senses, rhs)):
        row = np.asarray(row, dtype=float)
        cols = np.flatnonzero(row)
        b.add_row(f"c{i}", cols, row[cols], sense, value)
    return b.build()
