"""Linear output properties and the textual property language.

Grammar (whitespace-insensitive, neuron indices are 1-based)::

    spec      := untarget | target | conjuncts
    untarget  := "argmax" "!=" CLASS
    target    := "argmax" "==" CLASS
    CLASS     := INT | "label" | "pred"
    conjuncts := conjunct (("&&" | "and" | ",") conjunct)*
    conjunct  := expr REL expr
    REL       := "<=" | ">=" | "<" | ">" | "=" | "=="
    expr      := ["-"] term (("+" | "-") term)*
    term      := NUMBER ["*"] NEURON | NEURON | NUMBER
    NEURON    := ("o" | "v") "[" INT "]"
    NUMBER    := decimal or "p/q" fraction

``label`` and ``pred`` are resolved per input by the batch harness (the dataset
label and the network's original prediction respectively).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Sequence

from .numeric import Arithmetic, Number, convert, parse_number


class PropertyError(ValueError):
    """Unparseable property text or an ill-formed property."""


class Rel(str, enum.Enum):
    LE = "<="
    LT = "<"
    GE = ">="
    GT = ">"
    EQ = "="

    @property
    def strict(self) -> bool:
        return self in (Rel.LT, Rel.GT)


@dataclass(frozen=True)
class Conjunct:
    coeffs: tuple[tuple[int, Number], ...]  # (0-based neuron, coefficient)
    rel: Rel
    rhs: Number

    def lhs(self, values) -> Number:
        return sum((c * values[q] for q, c in self.coeffs), 0)

    def holds(self, values, tol: Number = 0) -> bool:
        """Truth of the conjunct; ``tol`` only loosens non-strict and equality checks."""
        d = self.lhs(values) - self.rhs
        if self.rel is Rel.GT:
            return d > 0
        if self.rel is Rel.LT:
            return d < 0
        if self.rel is Rel.GE:
            return d >= -tol
        if self.rel is Rel.LE:
            return d <= tol
        return abs(d) <= tol

    def neurons(self) -> list[int]:
        return [q for q, _ in self.coeffs]


@dataclass(frozen=True)
class OutputProperty:
    """Conjunction of linear constraints over the neuron values of one layer."""

    conjuncts: tuple[Conjunct, ...]

    def __post_init__(self):
        if not self.conjuncts:
            raise PropertyError("a property needs at least one conjunct")

    def holds(self, values, tol: Number = 0) -> bool:
        return all(c.holds(values, tol) for c in self.conjuncts)

    def max_index(self) -> int:
        return max((q for c in self.conjuncts for q in c.neurons()), default=-1)

    def check_width(self, width: int) -> None:
        for c in self.conjuncts:
            for q in c.neurons():
                if not 0 <= q < width:
                    raise PropertyError(f"property references neuron {q + 1}, layer has {width}")

    def to_mode(self, mode: Arithmetic) -> "OutputProperty":
        return OutputProperty(tuple(
            Conjunct(tuple((q, convert(a, mode)) for q, a in c.coeffs), c.rel, convert(c.rhs, mode))
            for c in self.conjuncts))

    def __str__(self) -> str:
        return " && ".join(_format_conjunct(c) for c in self.conjuncts)

    @classmethod
    def greater(cls, t: int, s: int) -> "OutputProperty":
        """``o_t > o_s`` with 0-based indices."""
        return cls((Conjunct(((t, 1), (s, -1)), Rel.GT, 0),))


@dataclass(frozen=True)
class Untargeted:
    """``argmax != label``: any class other than ``label`` wins."""

    label: int | str  # 0-based class, or "label"/"pred" placeholder

    def targets(self, output: Sequence[Number], label: int) -> list[OutputProperty]:
        """``o_t > o_label`` for every ``t != label``, highest original output first."""
        order = sorted((t for t in range(len(output)) if t != label),
                       key=lambda t: (-output[t], t))
        return [OutputProperty.greater(t, label) for t in order]


@dataclass(frozen=True)
class Targeted:
    """``argmax == label``: class ``label`` beats every other class."""

    label: int | str

    def property(self, width: int, label: int) -> OutputProperty:
        return OutputProperty(tuple(
            Conjunct(((label, 1), (j, -1)), Rel.GT, 0) for j in range(width) if j != label))


PropertySpec = OutputProperty | Untargeted | Targeted


def _format_conjunct(c: Conjunct) -> str:
    parts = []
    for q, a in c.coeffs:
        sign = "-" if a < 0 else "+"
        mag = abs(a)
        term = f"o[{q + 1}]" if mag == 1 else f"{mag}*o[{q + 1}]"
        parts.append(f"{sign} {term}")
    text = " ".join(parts) or "0"
    if text.startswith("+ "):
        text = text[2:]
    return f"{text} {c.rel.value} {c.rhs}"


_TOKEN = re.compile(r"""
    \s*(?:
      (?P<neuron>[ov]\s*\[\s*\d+\s*\])
    | (?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?(?:\s*/\s*\d+)?|\.\d+(?:[eE][-+]?\d+)?)
    | (?P<rel><=|>=|==|!=|<|>|=)
    | (?P<op>[-+*])
    | (?P<sep>&&|,|\band\b)
    | (?P<word>[A-Za-z_]+)
    )""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str]]:
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PropertyError(f"unexpected input at column {pos + 1}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def _class_token(tok: tuple[str, str]) -> int | str:
    kind, val = tok
    if kind == "num" and val.isdigit():
        if int(val) < 1:
            raise PropertyError("class indices are 1-based")
        return int(val) - 1
    if kind == "word" and val in ("label", "pred"):
        return val
    raise PropertyError(f"expected a class index, 'label' or 'pred', got {val!r}")


def parse_property(text: str, mode: Arithmetic = Arithmetic.RATIONAL) -> PropertySpec:
    """Parse the property language into an :class:`OutputProperty` or a class goal."""
    toks = _tokenize(text)
    if not toks:
        raise PropertyError("empty property")
    if toks[0] == ("word", "argmax"):
        if len(toks) != 3 or toks[1][0] != "rel" or toks[1][1] not in ("!=", "==", "="):
            raise PropertyError("expected 'argmax != CLASS' or 'argmax == CLASS'")
        label = _class_token(toks[2])
        return Untargeted(label) if toks[1][1] == "!=" else Targeted(label)

    conjuncts = []
    pos = 0
    while True:
        lhs, pos = _parse_expr(toks, pos, mode)
        if pos >= len(toks) or toks[pos][0] != "rel" or toks[pos][1] == "!=":
            raise PropertyError("expected a relation (<, <=, >, >=, =)")
        rel_text = toks[pos][1]
        rhs, pos = _parse_expr(toks, pos + 1, mode)
        coeffs: dict[int, Number] = {}
        for q, a in lhs[0].items():
            coeffs[q] = coeffs.get(q, 0) + a
        for q, a in rhs[0].items():
            coeffs[q] = coeffs.get(q, 0) - a
        const = rhs[1] - lhs[1]
        rel = Rel("=" if rel_text == "==" else rel_text)
        items = tuple((q, convert(a, mode)) for q, a in sorted(coeffs.items()) if a != 0)
        if not items:
            raise PropertyError("a conjunct must mention at least one neuron")
        conjuncts.append(Conjunct(items, rel, convert(const, mode)))
        if pos == len(toks):
            break
        if toks[pos][0] != "sep":
            raise PropertyError(f"expected '&&' between conjuncts, got {toks[pos][1]!r}")
        pos += 1
    return OutputProperty(tuple(conjuncts))


def _parse_expr(toks, pos, mode):
    coeffs: dict[int, Number] = {}
    const = convert(0, mode)
    sign = 1
    expect_term = True
    if pos < len(toks) and toks[pos] == ("op", "-"):
        sign = -1
        pos += 1
    while True:
        if pos >= len(toks):
            raise PropertyError("unexpected end of property")
        kind, val = toks[pos]
        if kind == "num":
            num = parse_number(val.replace(" ", ""), mode)
            pos += 1
            if pos < len(toks) and toks[pos] == ("op", "*"):
                pos += 1
            if pos < len(toks) and toks[pos][0] == "neuron":
                q = _neuron(toks[pos][1])
                coeffs[q] = coeffs.get(q, 0) + sign * num
                pos += 1
            else:
                const += sign * num
        elif kind == "neuron":
            q = _neuron(val)
            coeffs[q] = coeffs.get(q, 0) + sign * convert(1, mode)
            pos += 1
        else:
            raise PropertyError(f"expected a term, got {val!r}")
        expect_term = False
        if pos < len(toks) and toks[pos][0] == "op" and toks[pos][1] in "+-":
            sign = 1 if toks[pos][1] == "+" else -1
            pos += 1
            expect_term = True
            continue
        if not expect_term:
            return (coeffs, const), pos


def _neuron(text: str) -> int:
    idx = int(re.search(r"\d+", text).group())
    if idx < 1:
        raise PropertyError("neuron indices are 1-based")
    return idx - 1
