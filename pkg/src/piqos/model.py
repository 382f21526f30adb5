"""Core domain types: the inter-domain graph, the SLA parameter schema,
registered offerings and Pareto dominance between offerings.

Everything here is an immutable value; functions are pure.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Union

from piqos.errors import GraphError, InvalidComparison, SchemaViolation, UnknownSegment

Segment = tuple[str, str]


class Composition(str, enum.Enum):
    ADDITIVE = "additive"
    NORMAL_SUM = "normal_sum"


class Sense(str, enum.Enum):
    LOWER_BETTER = "lower_better"
    HIGHER_BETTER = "higher_better"


class Extraction(str, enum.Enum):
    VALUE = "value"
    ON_TIME_PROBABILITY = "on_time_probability"


@dataclass(frozen=True)
class DomainGraph:
    """Directed adjacency between LSP domains."""

    domains: frozenset[str]
    edges: frozenset[Segment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domains", frozenset(self.domains))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for frm, to in self.edges:
            if frm == to:
                raise GraphError(f"self-loop edge {frm}->{to}")
            for d in (frm, to):
                if d not in self.domains:
                    raise GraphError(f"edge {frm}->{to} references unknown domain {d!r}")

    @classmethod
    def from_edges(cls, edges: Iterable[Segment], domains: Iterable[str] = ()) -> DomainGraph:
        edges = [tuple(e) for e in edges]
        doms = set(domains)
        for frm, to in edges:
            doms.update((frm, to))
        return cls(frozenset(doms), frozenset(edges))

    def has_edge(self, frm: str, to: str) -> bool:
        return (frm, to) in self.edges

    def successors(self, domain: str) -> list[str]:
        return sorted(to for frm, to in self.edges if frm == domain)


@dataclass(frozen=True)
class ParameterDecl:
    name: str
    unit: str = ""
    composition: Composition = Composition.ADDITIVE
    sense: Sense = Sense.LOWER_BETTER
    extraction: Extraction = Extraction.VALUE

    def __post_init__(self) -> None:
        object.__setattr__(self, "composition", Composition(self.composition))
        object.__setattr__(self, "sense", Sense(self.sense))
        object.__setattr__(self, "extraction", Extraction(self.extraction))
        if (self.extraction is Extraction.ON_TIME_PROBABILITY
                and self.composition is not Composition.NORMAL_SUM):
            raise SchemaViolation(f"parameter {self.name!r}: on-time probability needs normal_sum composition")

    @property
    def decision_sense(self) -> Sense:
        """Sense of the extracted decision value x_i (probabilities are always higher-better)."""
        if self.extraction is Extraction.ON_TIME_PROBABILITY:
            return Sense.HIGHER_BETTER
        return self.sense


@dataclass(frozen=True)
class ParameterSchema:
    params: tuple[ParameterDecl, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(self.params))
        if not self.params:
            raise SchemaViolation("schema needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SchemaViolation(f"duplicate parameter names in {names}")

    def __len__(self) -> int:
        return len(self.params)

    def __iter__(self):
        return iter(self.params)

    @property
    def needs_deadline(self) -> bool:
        return any(p.extraction is Extraction.ON_TIME_PROBABILITY for p in self.params)


@dataclass(frozen=True)
class Scalar:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise SchemaViolation(f"scalar value must be finite, got {self.value}")


@dataclass(frozen=True)
class Normal:
    """Transport time as a normal distribution: mean (h) and variance (h^2)."""

    mean: float
    variance: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise SchemaViolation("normal mean/variance must be finite")
        if self.mean < 0:
            raise SchemaViolation(f"normal mean must be >= 0, got {self.mean}")
        if self.variance < 0:
            raise SchemaViolation(f"normal variance must be >= 0, got {self.variance}")


ParamValue = Union[Scalar, Normal]

_VARIANT = {Composition.ADDITIVE: Scalar, Composition.NORMAL_SUM: Normal}


def check_values(values: Sequence[ParamValue], schema: ParameterSchema) -> None:
    """Raise SchemaViolation unless ``values`` matches the schema positionally."""
    if len(values) != len(schema):
        raise SchemaViolation(f"expected {len(schema)} values, got {len(values)}")
    for decl, v in zip(schema, values):
        want = _VARIANT[decl.composition]
        if not isinstance(v, want):
            raise SchemaViolation(
                f"parameter {decl.name!r} ({decl.composition.value}) needs {want.__name__}, got {type(v).__name__}")


@dataclass(frozen=True)
class SlaOffering:
    """One Pareto alternative registered for a directed segment."""

    id: str
    from_domain: str
    to_domain: str
    values: tuple[ParamValue, ...]
    label: str = ""
    registered_by: str | None = None
    updated_at: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        if self.registered_by is None:
            object.__setattr__(self, "registered_by", self.from_domain)

    @property
    def segment(self) -> Segment:
        return (self.from_domain, self.to_domain)


def validate_offering(offering: SlaOffering, graph: DomainGraph, schema: ParameterSchema) -> None:
    if not graph.has_edge(*offering.segment):
        raise UnknownSegment(f"{offering.from_domain}->{offering.to_domain} is not an edge")
    if offering.registered_by != offering.from_domain:
        raise SchemaViolation(f"offering {offering.id!r} must be registered by {offering.from_domain!r}")
    check_values(offering.values, schema)


def dominance_key(offering: SlaOffering, schema: ParameterSchema) -> tuple[float, ...]:
    """Canonical all-lower-better vector used for dominance tests.

    Scalars are negated for higher-better parameters; a normal value
    contributes (mean, variance).
    """
    check_values(offering.values, schema)
    key: list[float] = []
    for decl, v in zip(schema, offering.values):
        if isinstance(v, Normal):
            key.extend((v.mean, v.variance))
        elif decl.sense is Sense.HIGHER_BETTER:
            key.append(-v.value)
        else:
            key.append(v.value)
    return tuple(key)


def key_dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_dominates(a: SlaOffering, b: SlaOffering, schema: ParameterSchema) -> bool:
    if a.segment != b.segment:
        raise InvalidComparison(f"cannot compare offerings of {a.segment} and {b.segment}")
    return key_dominates(dominance_key(a, schema), dominance_key(b, schema))


def pareto_front(offerings: Iterable[SlaOffering], schema: ParameterSchema) -> list[SlaOffering]:
    """Offerings not dominated by any other in the collection (input order kept)."""
    items = list(offerings)
    keys = [dominance_key(o, schema) for o in items]
    return [o for i, o in enumerate(items)
            if not any(key_dominates(keys[j], keys[i]) for j in range(len(items)) if j != i)]


# default schema of the logistics example: cost, CO2 and normal transport time
LOGISTICS_SCHEMA = ParameterSchema((
    ParameterDecl("cost", "EUR"),
    ParameterDecl("co2", "kg"),
    ParameterDecl("transport_time", "h", Composition.NORMAL_SUM, Sense.LOWER_BETTER,
                  Extraction.ON_TIME_PROBABILITY),
))
