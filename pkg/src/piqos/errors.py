"""Exception hierarchy shared by the registry, processor and gateway."""

from __future__ import annotations


class QosError(Exception):
    """Base class for every error raised by piqos."""


class SchemaViolation(QosError):
    """Values do not match the parameter schema (arity or variant)."""


class GraphError(QosError):
    """Malformed domain graph or unknown domain."""


class UnknownSegment(QosError):
    """The (from, to) pair is not an edge of the domain graph."""


class InvalidComparison(QosError):
    """Dominance was requested between offerings of different segments."""


class Unauthorized(QosError):
    """Credential does not match the owning domain."""


class OfferingNotFound(QosError):
    pass


class DuplicateOffering(QosError):
    pass


class CommandError(QosError):
    """Malformed QoS command text.

    ``entry`` is the 1-based position of the offending entry when known.
    """

    def __init__(self, message: str, entry: int | None = None, text: str | None = None):
        self.entry = entry
        self.text = text
        if entry is not None:
            message = f"entry {entry} ({text!r}): {message}" if text is not None else f"entry {entry}: {message}"
        super().__init__(message)


class MissingBinding(QosError):
    """A decision value needs a query input (the deadline) that was not given."""


class DocumentError(QosError):
    """Registry document failed validation; ``violations`` lists each problem."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"invalid registry document: {lines}{more}")
