"""Branch-and-bound over binary variables using LP relaxations."""
from __future__ import annotations

import heapq
import itertools
from typing import Callable

from ..numeric import Arithmetic
from .model import LinearProgram, Solution, Status

INTEGRALITY_TOL = 1e-9


def branch_and_bound(lp: LinearProgram, relax: Callable[[LinearProgram], Solution],
                     node_limit: int = 10_000) -> Solution:
    """Best-bound search with most-fractional branching (ties go to the lowest index).

    When ``node_limit`` is hit the best incumbent found so far, if any, is
    returned with status ``ITERATION_LIMIT``.
    """
    exact = lp.mode is Arithmetic.RATIONAL
    binaries = lp.binaries
    names = [v.name for v in lp.variables]
    tol = 0 if exact else INTEGRALITY_TOL
    half = lp.num(1) / 2

    counter = itertools.count()
    incumbent: Solution | None = None
    nodes = 0
    iterations = 0

    root = relax(lp)
    iterations += root.iterations
    nodes += 1
    if root.status is not Status.OPTIMAL:
        return Solution(root.status, iterations=iterations, nodes=nodes, names=names)
    heap = [(root.objective, next(counter), {}, root)]

    while heap:
        bound, _, fixed, sol = heapq.heappop(heap)
        if incumbent is not None and bound >= incumbent.objective - tol:
            break
        branch_var = None
        best_dist = None
        for j in binaries:
            x = sol.values[j]
            frac = x - int(x) if x >= 0 else x - int(x) + 1
            if frac <= tol or frac >= 1 - tol:
                continue
            dist = abs(frac - half)
            if best_dist is None or dist < best_dist:
                branch_var, best_dist = j, dist
        if branch_var is None:
            values = list(sol.values)
            if not exact:
                for j in binaries:
                    values[j] = float(round(values[j]))
            cand = Solution(Status.OPTIMAL, values, lp.objective_value(values), names=names)
            if incumbent is None or cand.objective < incumbent.objective:
                incumbent = cand
            continue
        for side in (0, 1):
            if nodes >= node_limit:
                return _finish(incumbent, Status.ITERATION_LIMIT, iterations, nodes, names)
            child_fixed = dict(fixed)
            child_fixed[branch_var] = side
            child = lp.copy()
            for j, val in child_fixed.items():
                child.variables[j].lower = child.variables[j].upper = lp.num(val)
            res = relax(child)
            nodes += 1
            iterations += res.iterations
            if res.status is Status.OPTIMAL:
                if incumbent is None or res.objective < incumbent.objective - tol:
                    heapq.heappush(heap, (res.objective, next(counter), child_fixed, res))
            elif res.status is Status.ITERATION_LIMIT:
                return _finish(incumbent, Status.ITERATION_LIMIT, iterations, nodes, names)

    if incumbent is None:
        return Solution(Status.INFEASIBLE, iterations=iterations, nodes=nodes, names=names)
    return _finish(incumbent, Status.OPTIMAL, iterations, nodes, names)


def _finish(incumbent, status, iterations, nodes, names) -> Solution:
    if incumbent is None:
        return Solution(status, iterations=iterations, nodes=nodes, names=names)
    return Solution(status, incumbent.values, incumbent.objective, iterations, nodes, names)
