"""Write programs in CPLEX LP text format for cross-checking with external solvers."""
from __future__ import annotations

import re

from .model import LinearProgram, Relation, VarKind

_LP_REL = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}


def _name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", text)


def _num(value) -> str:
    return repr(float(value))


def _expr(coeffs: dict, names: list[str]) -> str:
    if not coeffs:
        return "0 " + names[0] if names else "0"
    parts = []
    for j, c in sorted(coeffs.items()):
        c = float(c)
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_num(abs(c))} {names[j]}")
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else out


def dump_lp(lp: LinearProgram) -> str:
    """LP text of ``lp``; rational coefficients are written as decimals."""
    names = [_name(v.name) for v in lp.variables]
    lines = [f"\\ {lp.name}", "Minimize", f" obj: {_expr(lp.objective, names)}", "Subject To"]
    for con in lp.constraints:
        lines.append(f" {_name(con.name)}: {_expr(con.coeffs, names)} "
                     f"{_LP_REL[con.relation]} {_num(con.rhs)}")
    lines.append("Bounds")
    for v, name in zip(lp.variables, names):
        if v.kind is VarKind.BINARY:
            continue
        if v.lower is None and v.upper is None:
            lines.append(f" {name} free")
            continue
        lo = "-inf" if v.lower is None else _num(v.lower)
        hi = "+inf" if v.upper is None else _num(v.upper)
        lines.append(f" {lo} <= {name} <= {hi}")
    bins = [name for v, name in zip(lp.variables, names) if v.kind is VarKind.BINARY]
    if bins:
        lines.append("Binaries")
        lines.append(" " + " ".join(bins))
    lines.append("End")
    return "\n".join(lines) + "\n"
