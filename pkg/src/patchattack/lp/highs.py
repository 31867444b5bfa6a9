"""Float-mode backend delegating to SciPy's HiGHS interface."""
from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from ..numeric import Arithmetic
from .model import LinearProgram, Relation, Solution, Status, VarKind


def _arrays(lp: LinearProgram):
    n = len(lp.variables)
    c = np.zeros(n)
    for j, v in lp.objective.items():
        c[j] = float(v)
    lo = np.array([-np.inf if v.lower is None else float(v.lower) for v in lp.variables])
    hi = np.array([np.inf if v.upper is None else float(v.upper) for v in lp.variables])
    rows, cols, data = [], [], []
    row_lo, row_hi = [], []
    for i, con in enumerate(lp.constraints):
        for j, a in con.coeffs.items():
            rows.append(i)
            cols.append(j)
            data.append(float(a))
        rhs = float(con.rhs)
        row_lo.append(-np.inf if con.relation is Relation.LE else rhs)
        row_hi.append(np.inf if con.relation is Relation.GE else rhs)
    a = sparse.csr_array((data, (rows, cols)), shape=(len(lp.constraints), n))
    finite_rhs = [b for b in (*row_lo, *row_hi) if b not in (np.inf, -np.inf)]
    if not (np.isfinite(c).all() and np.isfinite(a.data).all() and np.isfinite(finite_rhs).all()
            and not np.isnan(lo).any() and not np.isnan(hi).any()):
        raise ValueError(f"{lp.name}: non-finite coefficient or bound")
    return c, lo, hi, a, np.array(row_lo), np.array(row_hi)


def _status(code: int) -> Status:
    return {0: Status.OPTIMAL, 1: Status.ITERATION_LIMIT, 2: Status.INFEASIBLE,
            3: Status.UNBOUNDED}.get(code, Status.ITERATION_LIMIT)


def solve_highs(lp: LinearProgram, time_limit: float | None = None,
                integral: bool = True) -> Solution:
    if lp.mode is not Arithmetic.FLOAT:
        raise ValueError("the HiGHS backend only accepts float-mode programs")
    names = [v.name for v in lp.variables]
    c, lo, hi, a, row_lo, row_hi = _arrays(lp)
    options = {}
    if time_limit is not None:
        options["time_limit"] = time_limit
    binaries = lp.binaries if integral else []
    if binaries:
        integrality = np.zeros(len(c))
        integrality[binaries] = 1
        cons = [LinearConstraint(a, row_lo, row_hi)] if a.shape[0] else []
        res = milp(c, constraints=cons, integrality=integrality, bounds=Bounds(lo, hi),
                   options=options)
        status = _status(res.status)
        if res.x is None:
            return Solution(status if status is not Status.OPTIMAL else Status.INFEASIBLE, names=names)
        values = [float(v) for v in res.x]
        for j in binaries:
            values[j] = float(round(values[j]))
        return Solution(status, values, lp.objective_value(values), names=names)

    eq = np.isfinite(row_lo) & (row_lo == row_hi)
    ub_parts, b_ub = [], []
    if a.shape[0]:
        has_hi = np.isfinite(row_hi) & ~eq
        has_lo = np.isfinite(row_lo) & ~eq
        if has_hi.any():
            ub_parts.append(a[has_hi])
            b_ub.append(row_hi[has_hi])
        if has_lo.any():
            ub_parts.append(-a[has_lo])
            b_ub.append(-row_lo[has_lo])
    a_ub = sparse.vstack(ub_parts).tocsr() if ub_parts else None
    b_ub = np.concatenate(b_ub) if b_ub else None
    a_eq = a[eq] if eq.any() else None
    b_eq = row_lo[eq] if eq.any() else None
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=list(zip(lo, hi)), method="highs-ds", options=options)
    status = _status(res.status)
    if status is not Status.OPTIMAL or res.x is None:
        return Solution(status, names=names)
    values = [float(v) for v in res.x]
    return Solution(Status.OPTIMAL, values, lp.objective_value(values),
                    iterations=int(getattr(res, "nit", 0)), names=names)
