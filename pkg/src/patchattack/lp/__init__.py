"""LP/MILP modelling and solving.

``solve_lp`` and ``solve_milp`` dispatch to a backend: the built-in exact/float
simplex with branch-and-bound (``"simplex"``) or SciPy's HiGHS (``"highs"``,
float programs only).  ``"auto"`` picks the simplex for rational programs and
HiGHS for float ones.
"""
from __future__ import annotations

from ..numeric import Arithmetic
from .lpformat import dump_lp
from .milp import branch_and_bound
from .model import Constraint, LinearProgram, Relation, Solution, Status, Variable, VarKind
from .simplex import solve_simplex

BACKENDS = ("auto", "simplex", "highs")


def _resolve(lp: LinearProgram, backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown LP backend {backend!r}; choose from {BACKENDS}")
    if backend == "auto":
        return "simplex" if lp.mode is Arithmetic.RATIONAL else "highs"
    return backend


def solve_lp(lp: LinearProgram, backend: str = "simplex", max_iter: int = 200_000) -> Solution:
    """Solve ``lp`` as a pure LP.  Binary variables are rejected."""
    if lp.binaries:
        raise ValueError("solve_lp does not accept binary variables; use solve_milp")
    if _resolve(lp, backend) == "highs":
        from .highs import solve_highs
        return solve_highs(lp)
    return solve_simplex(lp, max_iter=max_iter)


def solve_milp(lp: LinearProgram, backend: str = "simplex", node_limit: int = 10_000,
               time_limit: float | None = None) -> Solution:
    """Solve ``lp`` with its binary variables enforced integral."""
    if _resolve(lp, backend) == "highs":
        from .highs import solve_highs
        return solve_highs(lp, time_limit=time_limit)
    if not lp.binaries:
        return solve_simplex(lp)
    return branch_and_bound(lp, solve_simplex, node_limit=node_limit)


__all__ = [
    "BACKENDS", "Constraint", "LinearProgram", "Relation", "Solution", "Status", "Variable",
    "VarKind", "branch_and_bound", "dump_lp", "solve_lp", "solve_milp", "solve_simplex",
]
