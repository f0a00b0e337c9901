"""Reading and writing the CPLEX LP text format.

The writer emits a fixed layout::

    \\ Problem: <name>
    Minimize
     obj: 3 x + 2 y
    Subject To
     c1: x + y >= 3
    Bounds
     0 <= x <= 10
     y >= 0
    End

Every variable gets exactly one line in ``Bounds`` (in variable order), so
the parser recovers the original ordering. Coefficients are written with
``repr`` and round-trip bit for bit. The ``Subject To`` section is left out
when there are no rows.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .lp import LpBuilder, LpProblem

MAX_NAME = 255
TERMS_PER_LINE = 8
_ALLOWED = re.compile(r"[^A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]")
_RESERVED = {"free", "inf", "infinity", "st", "s.t.", "end", "bounds", "bound", "subject", "such",
             "minimize", "maximize", "minimum", "maximum", "min", "max", "general", "generals",
             "binary", "binaries", "gen", "bin"}


class LpFormatError(ValueError):
    pass


def sanitize_name(name: str) -> str:
    """Map ``name`` onto the LP-format character set and length limit."""
    clean = _ALLOWED.sub("_", name)
    if not clean or clean[0].isdigit() or clean[0] in ".eE" or clean.lower() in _RESERVED:
        clean = "_" + clean
    if len(clean) > MAX_NAME:
        digest = hashlib.sha1(name.encode()).hexdigest()[:8]
        clean = clean[: MAX_NAME - 9] + "~" + digest
    return clean


def _unique_names(names) -> list[str]:
    out, seen = [], set()
    for name in names:
        clean = sanitize_name(name)
        candidate, k = clean, 1
        while candidate in seen:
            suffix = f"#{k}"
            candidate = clean[: MAX_NAME - len(suffix)] + suffix
            k += 1
        seen.add(candidate)
        out.append(candidate)
    return out


def _num(value: float) -> str:
    if value == np.inf:
        return "inf"
    if value == -np.inf:
        return "-inf"
    return repr(float(value)) if value != 0 else "0"


def _expr(cols, vals, names) -> list[str]:
    terms = []
    for i, (c, v) in enumerate(zip(cols, vals)):
        sign = "-" if v < 0 else "+"
        term = f"{abs(float(v))!r} {names[c]}"
        terms.append(term if i == 0 and sign == "+" else f"{sign} {term}")
    lines = [" ".join(terms[i : i + TERMS_PER_LINE]) for i in range(0, len(terms), TERMS_PER_LINE)]
    return lines


def export_lp_file(problem: LpProblem) -> str:
    problem.validate()
    names = _unique_names(problem.var_names)
    rows = _unique_names(problem.row_names)
    out = [f"\\ Problem: {sanitize_name(problem.name)}", "Minimize"]
    nz = np.flatnonzero(problem.objective)
    if len(nz) == 0 and problem.n_vars:
        nz = np.array([0])
    obj_lines = _expr(nz, problem.objective[nz], names) if len(nz) else ["0"]
    out.append(" obj: " + obj_lines[0])
    out.extend("   " + line for line in obj_lines[1:])
    if problem.n_rows:
        out.append("Subject To")
        A = problem.matrix
        for i in range(problem.n_rows):
            start, stop = A.indptr[i], A.indptr[i + 1]
            lines = _expr(A.indices[start:stop], A.data[start:stop], names)
            lines[-1] += f" {problem.senses[i]} {_num(problem.rhs[i])}"
            out.append(f" {rows[i]}: " + lines[0])
            out.extend("   " + line for line in lines[1:])
    out.append("Bounds")
    for name, lo, up in zip(names, problem.lower, problem.upper):
        if lo == up:
            out.append(f" {name} = {_num(lo)}")
        elif lo == -np.inf and up == np.inf:
            out.append(f" {name} free")
        elif up == np.inf:
            out.append(f" {name} >= {_num(lo)}")
        else:
            out.append(f" {_num(lo)} <= {name} <= {_num(up)}")
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(
    r"\s*(?:(?P<cmp><=|>=|=<|=>|<|>|=)|(?P<colon>:)|(?P<sign>[+-])"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z!\"#$%&()/,.;?@_`'{}|~][A-Za-z0-9!\"#$%&()/,.;?@_`'{}|~]*))"
)
_SECTION = re.compile(
    r"^\s*(?P<kw>minimize|minimum|min|maximize|maximum|max|subject\s+to|such\s+that|s\.t\.|st"
    r"|bounds?|generals?|gen|binar(?:y|ies)|bin|end)\s*$",
    re.IGNORECASE,
)


def _tokens(text: str, where: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LpFormatError(f"cannot tokenize {where} near {text[pos:pos + 20]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def _is_inf(tok: tuple[str, str]) -> bool:
    return tok[0] == "name" and tok[1].lower() in ("inf", "infinity")


def _parse_linear(toks, i, var_order, stop_at_cmp: bool):
    """Parse ``[+-] [coef] name ...`` starting at ``toks[i]``."""
    coefs: dict[str, float] = {}
    while i < len(toks) and not (toks[i][0] == "cmp" and stop_at_cmp):
        sign = 1.0
        while i < len(toks) and toks[i][0] == "sign":
            sign *= -1.0 if toks[i][1] == "-" else 1.0
            i += 1
        coef = 1.0
        if i < len(toks) and toks[i][0] == "num":
            coef = float(toks[i][1])
            i += 1
        if i >= len(toks) and coef == 0.0:
            break  # objective written as a bare "0"
        if i >= len(toks) or toks[i][0] != "name":
            raise LpFormatError("expected variable name in linear expression")
        name = toks[i][1]
        i += 1
        var_order.setdefault(name, len(var_order))
        coefs[name] = coefs.get(name, 0.0) + sign * coef
    return coefs, i


def _signed_number(toks, i) -> tuple[float, int]:
    sign = 1.0
    while i < len(toks) and toks[i][0] == "sign":
        sign *= -1.0 if toks[i][1] == "-" else 1.0
        i += 1
    if i < len(toks) and toks[i][0] == "num":
        return sign * float(toks[i][1]), i + 1
    if i < len(toks) and _is_inf(toks[i]):
        return sign * np.inf, i + 1
    raise LpFormatError("expected a number")


def _norm_cmp(op: str) -> str:
    return {"<": "<=", "=<": "<=", ">": ">=", "=>": ">=", "=": "="}.get(op, op)


def parse_lp_file(text: str, name: str | None = None) -> LpProblem:
    sections: dict[str, list[str]] = {"objective": [], "constraints": [], "bounds": []}
    current = None
    sense = 1.0
    problem_name = name or "lp"
    for raw in text.splitlines():
        if raw.lstrip().startswith("\\"):
            m = re.match(r"\\\s*Problem:\s*(\S+)", raw.strip())
            if m and name is None:
                problem_name = m.group(1)
            continue
        line = raw.split("\\", 1)[0]
        if not line.strip():
            continue
        m = _SECTION.match(line)
        if m:
            kw = m.group("kw").lower()
            if kw.startswith("min"):
                current = "objective"
            elif kw.startswith("max"):
                current, sense = "objective", -1.0
            elif kw.startswith(("subject", "such", "s.t", "st")):
                current = "constraints"
            elif kw.startswith("bound"):
                current = "bounds"
            elif kw == "end":
                current = "end"
            else:
                raise LpFormatError(f"integer section {kw!r} is not supported")
            continue
        if current is None or current == "end":
            raise LpFormatError(f"text outside a section: {line.strip()!r}")
        sections[current].append(line)

    var_order: dict[str, int] = {}
    bound_order: list[str] = []
    bounds: dict[str, list[float]] = {}

    toks = _tokens(" ".join(sections["objective"]), "objective")
    if len(toks) >= 2 and toks[0][0] == "name" and toks[1][0] == "colon":
        toks = toks[2:]
    objective, _ = _parse_linear(toks, 0, var_order, stop_at_cmp=False)

    rows = []
    toks = _tokens(" ".join(sections["constraints"]), "constraints")
    i, k = 0, 0
    while i < len(toks):
        row_name = f"r{k}"
        if i + 1 < len(toks) and toks[i][0] == "name" and toks[i + 1][0] == "colon":
            row_name = toks[i][1]
            i += 2
        coefs, i = _parse_linear(toks, i, var_order, stop_at_cmp=True)
        if i >= len(toks):
            raise LpFormatError(f"row {row_name!r} has no comparison operator")
        op = _norm_cmp(toks[i][1])
        rhs, i = _signed_number(toks, i + 1)
        rows.append((row_name, coefs, op, rhs))
        k += 1

    for line in sections["bounds"]:
        toks = _tokens(line, "bounds")
        _parse_bound(toks, bounds, bound_order, var_order)

    ordered = bound_order + [v for v in sorted(var_order, key=var_order.get) if v not in bounds]
    b = LpBuilder(problem_name)
    index = {}
    for v in ordered:
        lo, up = bounds.get(v, [0.0, np.inf])
        index[v] = b.add_var("var", v, lo, up, sense * objective.get(v, 0.0))
    for row_name, coefs, op, rhs in rows:
        b.add_row(row_name, [index[v] for v in coefs], list(coefs.values()), op, rhs)
    return b.build()


def _parse_bound(toks, bounds, order, var_order) -> None:
    def target(name: str) -> list[float]:
        if name not in bounds:
            bounds[name] = [0.0, np.inf]
            order.append(name)
            var_order.setdefault(name, len(var_order))
        return bounds[name]

    if len(toks) == 2 and toks[1][0] == "name" and toks[1][1].lower() == "free":
        b = target(toks[0][1])
        b[0], b[1] = -np.inf, np.inf
        return
    if toks and toks[0][0] == "name" and not _is_inf(toks[0]):
        # name op value
        b = target(toks[0][1])
        op = _norm_cmp(toks[1][1])
        value, _ = _signed_number(toks, 2)
        if op == "=":
            b[0] = b[1] = value
        elif op == ">=":
            b[0] = value
        else:
            b[1] = value
        return
    # value op name [op value]
    value, i = _signed_number(toks, 0)
    op = _norm_cmp(toks[i][1])
    b = target(toks[i + 1][1])
    if op == "<=":
        b[0] = value
    elif op == ">=":
        b[1] = value
    else:
        b[0] = b[1] = value
    i += 2
    if i < len(toks):
        op2 = _norm_cmp(toks[i][1])
        value2, _ = _signed_number(toks, i + 1)
        if op2 == "<=":
            b[1] = value2
        else:
            b[0] = value2
