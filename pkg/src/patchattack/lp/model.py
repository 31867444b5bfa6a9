"""Linear and mixed-binary program containers."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

from ..numeric import Arithmetic, Number, convert


class VarKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class Relation(str, enum.Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class Variable:
    name: str
    lower: Number | None = 0  # None means unbounded
    upper: Number | None = None
    kind: VarKind = VarKind.CONTINUOUS


@dataclass
class Constraint:
    coeffs: dict[int, Number]
    relation: Relation
    rhs: Number
    name: str = ""

    def activity(self, values) -> Number:
        return sum((c * values[j] for j, c in self.coeffs.items()), 0)

    def violation(self, values) -> Number:
        lhs = self.activity(values)
        if self.relation is Relation.LE:
            return max(lhs - self.rhs, 0)
        if self.relation is Relation.GE:
            return max(self.rhs - lhs, 0)
        return abs(lhs - self.rhs)


class LinearProgram:
    """Minimize ``objective . x`` subject to linear rows and per-variable bounds.

    Coefficients are stored in the program's arithmetic mode; rational programs
    are solved exactly.
    """

    def __init__(self, mode: Arithmetic = Arithmetic.RATIONAL, name: str = "lp"):
        self.mode = Arithmetic(mode)
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, Number] = {}
        self._names: dict[str, int] = {}

    def num(self, value) -> Number:
        return convert(value, self.mode)

    def add_variable(self, name: str | None = None, lower=0, upper=None,
                     kind: VarKind = VarKind.CONTINUOUS) -> int:
        idx = len(self.variables)
        name = name or f"x{idx}"
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind is VarKind.BINARY:
            lower = 0 if lower is None else max(self.num(lower), self.num(0))
            upper = 1 if upper is None else min(self.num(upper), self.num(1))
        if self.mode is Arithmetic.FLOAT:
            lo = None if lower is None else float(lower)
            hi = None if upper is None else float(upper)
        else:
            lo = None if lower is None else self.num(lower)
            hi = None if upper is None else self.num(upper)
        self.variables.append(Variable(name, lo, hi, kind))
        self._names[name] = idx
        return idx

    def index(self, name: str) -> int:
        return self._names[name]

    def add_constraint(self, coeffs: Mapping[int, Number], relation: Relation | str, rhs,
                       name: str = "") -> int:
        relation = Relation(relation)
        n = len(self.variables)
        if coeffs and not (0 <= min(coeffs) and max(coeffs) < n):
            raise IndexError("constraint references an undeclared variable")
        if self.mode is Arithmetic.FLOAT:
            row = {j: float(c) for j, c in coeffs.items() if c != 0}
        else:
            row = {}
            for j, c in coeffs.items():
                c = self.num(c)
                if c != 0:
                    row[j] = c
        self.constraints.append(Constraint(row, relation, self.num(rhs), name or f"c{len(self.constraints)}"))
        return len(self.constraints) - 1

    def minimize(self, coeffs: Mapping[int, Number]) -> None:
        self.objective = {j: self.num(c) for j, c in coeffs.items() if c != 0}

    @property
    def binaries(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    def copy(self) -> "LinearProgram":
        other = LinearProgram(self.mode, self.name)
        other.variables = [Variable(v.name, v.lower, v.upper, v.kind) for v in self.variables]
        other.constraints = self.constraints  # rows are never mutated after construction
        other.objective = dict(self.objective)
        other._names = self._names
        return other

    def validate(self) -> None:
        for v in self.variables:
            for b in (v.lower, v.upper):
                if b is not None and isinstance(b, float) and not math.isfinite(b):
                    raise ValueError(f"variable {v.name}: non-finite bound")
            if v.kind is VarKind.BINARY and (v.lower < 0 or v.upper > 1):
                raise ValueError(f"binary variable {v.name} has bounds outside [0, 1]")
        for con in self.constraints:
            for c in list(con.coeffs.values()) + [con.rhs]:
                if isinstance(c, float) and not math.isfinite(c):
                    raise ValueError(f"constraint {con.name}: non-finite coefficient")

    def objective_value(self, values) -> Number:
        return sum((c * values[j] for j, c in self.objective.items()), self.num(0))

    def max_violation(self, values) -> Number:
        """Largest bound or row violation of ``values`` (zero when feasible)."""
        worst = self.num(0)
        for j, v in enumerate(self.variables):
            if v.lower is not None:
                worst = max(worst, v.lower - values[j])
            if v.upper is not None:
                worst = max(worst, values[j] - v.upper)
        for con in self.constraints:
            worst = max(worst, con.violation(values))
        return worst


@dataclass
class Solution:
    status: Status
    values: list[Number] | None = None
    objective: Number | None = None
    iterations: int = 0
    nodes: int = 0
    names: list[str] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def has_assignment(self) -> bool:
        return self.values is not None

    @property
    def assignment(self) -> dict[str, Number]:
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values))

    def __getitem__(self, j: int) -> Number:
        if self.values is None:
            raise KeyError("solution carries no assignment")
        return self.values[j]
