"""Two-phase tableau simplex with Bland's anti-cycling rule.

Works over ``Fraction`` (exact) or ``float`` entries; the program's arithmetic
mode selects which.  Variables are mapped onto non-negative columns by shifting
finite lower bounds, mirroring upper-bounded-only variables and splitting free
ones; finite upper bounds of shifted variables become explicit rows.
"""
from __future__ import annotations

from ..numeric import Arithmetic
from .model import LinearProgram, Relation, Solution, Status

FLOAT_PIVOT_TOL = 1e-9
FLOAT_ZERO = 1e-12


class _Tableau:
    def __init__(self, rows, basis, n_cols, exact):
        self.rows = rows  # each row: n_cols coefficients + rhs
        self.basis = basis
        self.n_cols = n_cols
        self.exact = exact
        self.iterations = 0

    def pivot(self, r: int, c: int, obj_rows) -> None:
        prow = self.rows[r]
        pv = prow[c]
        if pv != 1:
            prow = [v / pv for v in prow]
            if not self.exact:
                prow = [0.0 if -FLOAT_ZERO < v < FLOAT_ZERO else v for v in prow]
            prow[c] = 1 if self.exact else 1.0
            self.rows[r] = prow
        nz = [j for j, v in enumerate(prow) if v != 0]
        for i, row in enumerate(self.rows):
            if i != r:
                self._eliminate(row, prow, c, nz)
        for row in obj_rows:
            self._eliminate(row, prow, c, nz)
        self.basis[r] = c
        self.iterations += 1

    def _eliminate(self, row, prow, c, nz):
        f = row[c]
        if f == 0:
            return
        for j in nz:
            row[j] -= f * prow[j]
        if not self.exact:
            for j in nz:
                if -FLOAT_ZERO < row[j] < FLOAT_ZERO:
                    row[j] = 0.0
        row[c] = 0 if self.exact else 0.0

    def run(self, obj, allowed: int, max_iter: int) -> Status:
        """Minimize the reduced-cost row ``obj`` over columns ``< allowed``."""
        tol = 0 if self.exact else FLOAT_PIVOT_TOL
        while True:
            if self.iterations >= max_iter:
                return Status.ITERATION_LIMIT
            enter = next((j for j in range(allowed) if obj[j] < -tol), None)
            if enter is None:
                return Status.OPTIMAL
            leave = None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > tol:
                    ratio = row[-1] / a
                    if (best is None or ratio < best
                            or (ratio == best and self.basis[i] < self.basis[leave])):
                        best, leave = ratio, i
            if leave is None:
                return Status.UNBOUNDED
            self.pivot(leave, enter, [obj])


def _column_map(lp: LinearProgram):
    """Map each variable to (offset, [(column, sign)]) and collect upper-bound rows."""
    zero = lp.num(0)
    maps = []
    ub_rows = []  # (column, bound)
    n = 0
    for v in lp.variables:
        lo, hi = v.lower, v.upper
        if lo is not None and hi is not None and lo == hi:
            maps.append((lo, []))
        elif lo is not None:
            maps.append((lo, [(n, 1)]))
            if hi is not None:
                ub_rows.append((n, hi - lo))
            n += 1
        elif hi is not None:
            maps.append((hi, [(n, -1)]))
            n += 1
        else:
            maps.append((zero, [(n, 1), (n + 1, -1)]))
            n += 2
    return maps, ub_rows, n


def solve_simplex(lp: LinearProgram, max_iter: int = 200_000) -> Solution:
    """Solve the continuous relaxation of ``lp`` (binary kinds are ignored)."""
    lp.validate()
    exact = lp.mode is Arithmetic.RATIONAL
    one = lp.num(1)
    zero = lp.num(0)
    names = [v.name for v in lp.variables]
    for v in lp.variables:
        if v.lower is not None and v.upper is not None and v.lower > v.upper:
            return Solution(Status.INFEASIBLE, names=names)

    maps, ub_rows, n_struct = _column_map(lp)

    # rows in structural columns: (coeff dict, relation, rhs)
    raw_rows = []
    for con in lp.constraints:
        row = {}
        rhs = con.rhs
        for j, c in con.coeffs.items():
            offset, cols = maps[j]
            rhs -= c * offset
            for col, sign in cols:
                row[col] = row.get(col, zero) + (c if sign > 0 else -c)
        row = {k: v for k, v in row.items() if v != 0}
        if not row:
            ok = ((con.relation is Relation.LE and rhs >= 0) or
                  (con.relation is Relation.GE and rhs <= 0) or
                  (con.relation is Relation.EQ and rhs == 0))
            if not exact:
                ok = ok or abs(rhs) <= FLOAT_PIVOT_TOL
            if not ok:
                return Solution(Status.INFEASIBLE, names=names)
            continue
        raw_rows.append((row, con.relation, rhs))
    for col, bound in ub_rows:
        raw_rows.append(({col: one}, Relation.LE, bound))

    n_slack = sum(1 for _, rel, _ in raw_rows if rel is not Relation.EQ)
    n_real = n_struct + n_slack
    rows = []
    basis = []
    needs_art = []
    slack = n_struct
    for row, rel, rhs in raw_rows:
        dense = [zero] * n_real
        for k, v in row.items():
            dense[k] = v
        slack_col = None
        if rel is Relation.LE:
            dense[slack] = one
            slack_col = slack
            slack += 1
        elif rel is Relation.GE:
            dense[slack] = -one
            slack_col = slack
            slack += 1
        if rhs < 0:
            dense = [-v for v in dense]
            rhs = -rhs
        dense.append(rhs)
        rows.append(dense)
        if slack_col is not None and dense[slack_col] == one:
            basis.append(slack_col)
            needs_art.append(False)
        else:
            basis.append(None)
            needs_art.append(True)

    n_art = sum(needs_art)
    n_cols = n_real + n_art
    art = n_real
    for i, row in enumerate(rows):
        rhs = row.pop()
        row.extend([zero] * n_art)
        if needs_art[i]:
            row[art] = one
            basis[i] = art
            art += 1
        row.append(rhs)

    tab = _Tableau(rows, basis, n_cols, exact)

    if n_art:
        phase1 = [zero] * n_real + [one] * n_art + [zero]
        for i, row in enumerate(rows):
            if needs_art[i]:
                phase1 = [a - b for a, b in zip(phase1, row)]
        status = tab.run(phase1, n_cols, max_iter)
        if status is Status.ITERATION_LIMIT:
            return Solution(status, iterations=tab.iterations, names=names)
        infeas = -phase1[-1]
        if infeas > (0 if exact else FLOAT_PIVOT_TOL * max(1, len(rows))):
            return Solution(Status.INFEASIBLE, iterations=tab.iterations, names=names)
        _drive_out_artificials(tab, n_real)

    cost = [zero] * n_cols + [zero]
    for j, c in lp.objective.items():
        _, cols = maps[j]
        for col, sign in cols:
            cost[col] += c if sign > 0 else -c
    for i, b in enumerate(tab.basis):
        cb = cost[b]
        if cb != 0:
            row = tab.rows[i]
            cost = [a - cb * r for a, r in zip(cost, row)]
    status = tab.run(cost, n_real, max_iter)
    if status is not Status.OPTIMAL:
        return Solution(status, iterations=tab.iterations, names=names)

    col_vals = [zero] * n_cols
    for i, b in enumerate(tab.basis):
        col_vals[b] = tab.rows[i][-1]
    values = []
    for offset, cols in maps:
        x = offset
        for col, sign in cols:
            x = x + col_vals[col] if sign > 0 else x - col_vals[col]
        values.append(x)
    return Solution(Status.OPTIMAL, values, lp.objective_value(values),
                    iterations=tab.iterations, names=names)


def _drive_out_artificials(tab: _Tableau, n_real: int) -> None:
    tol = 0 if tab.exact else FLOAT_PIVOT_TOL
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] >= n_real:
            row = tab.rows[i]
            col = next((j for j in range(n_real) if abs(row[j]) > tol), None)
            if col is None:
                del tab.rows[i]
                del tab.basis[i]
                continue
            tab.pivot(i, col, [])
        i += 1

