"""SLA calculus: compose per-segment values into end-to-end values and
extract the decision vector the command is evaluated against.

Additive parameters sum; normally distributed transport times sum
mean-wise and variance-wise (independent segments).  The on-time
probability of a composed transport time is the normal CDF at the
deadline.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

from piqos.errors import MissingBinding, SchemaViolation
from piqos.model import (
    Composition,
    Extraction,
    Normal,
    ParameterSchema,
    ParamValue,
    Scalar,
    check_values,
)

_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ComposedValues:
    values: tuple[ParamValue, ...]


@dataclass(frozen=True)
class DecisionVector:
    x: tuple[float, ...]
    deadline_hours: float | None = None

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, i: int) -> float:
        return self.x[i]


def compose_path(per_segment: Sequence[Sequence[ParamValue]], schema: ParameterSchema) -> ComposedValues:
    """Compose the value lists of consecutive segments into end-to-end values.

    Sums use ``math.fsum`` so the result does not depend on segment order.
    """
    if not per_segment:
        raise SchemaViolation("cannot compose an empty path")
    for values in per_segment:
        check_values(values, schema)
    out: list[ParamValue] = []
    for i, decl in enumerate(schema):
        column = [values[i] for values in per_segment]
        if decl.composition is Composition.ADDITIVE:
            out.append(Scalar(math.fsum(v.value for v in column)))
        else:
            out.append(Normal(math.fsum(v.mean for v in column),
                              math.fsum(v.variance for v in column)))
    return ComposedValues(tuple(out))


def std_normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function.

    ``erfc`` keeps full relative precision in the lower tail, so the
    result is accurate to a few ulps across the whole real line and
    saturates to exactly 0.0 / 1.0 far out in the tails.
    """
    if z == 0.0:
        return 0.5
    if z < 0.0:
        return 0.5 * math.erfc(-z * _SQRT1_2)
    return 1.0 - 0.5 * math.erfc(z * _SQRT1_2)


def on_time_probability(t: Normal, deadline: float) -> float:
    if t.variance == 0.0:
        return 1.0 if t.mean <= deadline else 0.0
    return std_normal_cdf((deadline - t.mean) / math.sqrt(t.variance))


def extract_decision_vector(cv: ComposedValues, schema: ParameterSchema,
                            deadline_hours: float | None = None) -> DecisionVector:
    """Map composed values to x.

    A normal value extracted as VALUE yields its mean.
    """
    check_values(cv.values, schema)
    if schema.needs_deadline:
        if deadline_hours is None:
            raise MissingBinding("schema has an on-time probability parameter; a deadline is required")
        if not deadline_hours > 0:
            raise MissingBinding(f"deadline must be > 0 hours, got {deadline_hours}")
    x: list[float] = []
    for decl, v in zip(schema, cv.values):
        if isinstance(v, Scalar):
            x.append(v.value)
        elif decl.extraction is Extraction.ON_TIME_PROBABILITY:
            x.append(on_time_probability(v, deadline_hours))
        else:
            x.append(v.mean)
    return DecisionVector(tuple(x), deadline_hours)
