"""QoS command vectors: parsing, rendering and evaluation.

A command is a positional list with one entry per schema parameter::

    (=10, >20, w=5, w=1)
    (w=3/5, w=2/5, >60%)

Constraint entries use ``=``, ``<``, ``<=``, ``>``, ``>=`` followed by a
bound; objective entries are ``w=`` followed by a non-negative weight.
Numbers may be decimals, fractions ``p/q`` and carry a trailing ``%``
(divide by 100).  Whitespace is ignored.

Numbers are kept as exact ``Fraction`` values so that weighted scores of
decimal inputs come out exact (3/5 * 155 + 2/5 * 110 is 137, not
137.00000000000003).
"""

from __future__ import annotations

import enum
import operator
import re
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from piqos.errors import CommandError
from piqos.model import ParameterSchema, Sense

EQ_TOLERANCE = 1e-9


class Op(str, enum.Enum):
    EQ = "="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


_COMPARE = {
    Op.LT: operator.lt,
    Op.LE: operator.le,
    Op.GT: operator.gt,
    Op.GE: operator.ge,
}


@dataclass(frozen=True)
class Constraint:
    op: Op
    c: Fraction

    def holds(self, value: float) -> bool:
        # compare in floating point: x = 0.6 must satisfy '>=60%'
        bound = float(self.c)
        if self.op is Op.EQ:
            return abs(value - bound) <= EQ_TOLERANCE
        return _COMPARE[self.op](value, bound)


@dataclass(frozen=True)
class Objective:
    weight: Fraction


CommandEntry = Union[Constraint, Objective]


@dataclass(frozen=True)
class QosCommand:
    entries: tuple[CommandEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def objective_indices(self) -> tuple[int, ...]:
        """0-based positions of the objective entries."""
        return tuple(i for i, e in enumerate(self.entries) if isinstance(e, Objective))

    def constraint_indices(self, op: Op | None = None) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.entries)
                     if isinstance(e, Constraint) and (op is None or e.op is op))


_NUM = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_ENTRY_RE = re.compile(rf"^(w=|<=|>=|=|<|>)({_NUM})(?:/({_NUM}))?(%)?$")
_PREFIX_RE = re.compile(r"^[Cc]=")


def _parse_entry(raw: str, pos: int) -> CommandEntry:
    m = _ENTRY_RE.match(raw)
    if m is None:
        raise CommandError("expected '<op><number>' or 'w=<number>'", pos, raw)
    tag, num, den, pct = m.groups()
    value = Fraction(num)
    if den is not None:
        d = Fraction(den)
        if d == 0:
            raise CommandError("division by zero", pos, raw)
        value /= d
    if pct:
        value /= 100
    if tag == "w=":
        if value < 0:
            raise CommandError("weight must be non-negative", pos, raw)
        return Objective(value)
    return Constraint(Op(tag), value)


def parse_command(text: str, schema: ParameterSchema | None = None) -> QosCommand:
    """Parse command text; entry i binds to schema parameter i."""
    body = re.sub(r"\s+", "", text)
    body = _PREFIX_RE.sub("", body)
    if not (body.startswith("(") and body.endswith(")")):
        raise CommandError(f"command must be parenthesised, got {text!r}")
    inner = body[1:-1]
    if not inner:
        raise CommandError("command has no entries")
    entries = tuple(_parse_entry(raw, i) for i, raw in enumerate(inner.split(","), start=1))
    if not any(isinstance(e, Objective) for e in entries):
        raise CommandError("command needs at least one objective entry 'w=...'")
    if schema is not None and len(entries) != len(schema):
        raise CommandError(f"command has {len(entries)} entries but the schema has {len(schema)} parameters")
    return QosCommand(entries)


def _fmt(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def render_command(cmd: QosCommand) -> str:
    """Canonical text form; ``parse_command(render_command(c)) == c``."""
    parts = []
    for e in cmd.entries:
        if isinstance(e, Objective):
            parts.append(f"w={_fmt(e.weight)}")
        else:
            parts.append(f"{e.op.value}{_fmt(e.c)}")
    return "(" + ", ".join(parts) + ")"


def check_constraints(cmd: QosCommand, x: Sequence[float]) -> bool:
    if len(x) != len(cmd):
        raise CommandError(f"decision vector has {len(x)} entries, command has {len(cmd)}")
    return all(e.holds(xi) for e, xi in zip(cmd.entries, x) if isinstance(e, Constraint))


def exact_score(cmd: QosCommand, x: Sequence[float], schema: ParameterSchema) -> Fraction:
    """Weighted objective as an exact rational; lower is better.

    Higher-better decision values enter with a negative sign so that the
    ranking is always ascending.
    """
    if len(x) != len(cmd) or len(cmd) != len(schema):
        raise CommandError("arity mismatch between command, decision vector and schema")
    total = Fraction(0)
    for e, xi, decl in zip(cmd.entries, x, schema):
        if isinstance(e, Objective) and e.weight:
            term = e.weight * Fraction(xi)
            total += -term if decl.decision_sense is Sense.HIGHER_BETTER else term
    return total


def score(cmd: QosCommand, x: Sequence[float], schema: ParameterSchema) -> float:
    return float(exact_score(cmd, x, schema))
