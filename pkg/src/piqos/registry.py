"""The SLA registry: versioned, Pareto-pruned storage of offerings.

Every successful mutation publishes a new immutable ``RegistrySnapshot``
(copy-on-write), so readers holding an older snapshot are never blocked
or disturbed by writers.  Mutations are serialized by a lock.

Raw offering values only leave the registry through ``read_back``, which
requires the owning domain's credential.
"""

from __future__ import annotations

import hmac
import json
import logging
import os
import tempfile
import threading
from collections import deque
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from piqos.errors import (
    DocumentError,
    DuplicateOffering,
    OfferingNotFound,
    QosError,
    Unauthorized,
    UnknownSegment,
)
from piqos.model import (
    Composition,
    DomainGraph,
    Normal,
    ParameterDecl,
    ParameterSchema,
    ParamValue,
    Scalar,
    Segment,
    SlaOffering,
    dominance_key,
    key_dominates,
    pareto_dominates,
    validate_offering,
)

logger = logging.getLogger(__name__)

ACCEPTED = "accepted"
REPLACED_EXISTING = "replaced-existing"
PRUNED_DOMINATED = "pruned-dominated"


@dataclass(frozen=True, eq=True)
class RegistrySnapshot:
    """Immutable view of the registry at one version.

    ``offerings`` maps each segment to its Pareto frontier ordered by id;
    segments with nothing registered are absent.  Treat it as read-only.
    """

    version: int
    graph: DomainGraph
    schema: ParameterSchema
    offerings: Mapping[Segment, tuple[SlaOffering, ...]] = field(default_factory=dict)

    def offerings_for_segment(self, frm: str, to: str) -> list[SlaOffering]:
        if not self.graph.has_edge(frm, to):
            raise UnknownSegment(f"{frm}->{to} is not an edge")
        return list(self.offerings.get((frm, to), ()))

    def all_offerings(self) -> list[SlaOffering]:
        """All offerings ordered by (from, to, id)."""
        return sorted((o for group in self.offerings.values() for o in group),
                      key=lambda o: (o.from_domain, o.to_domain, o.id))

    def find(self, offering_id: str) -> SlaOffering | None:
        for group in self.offerings.values():
            for o in group:
                if o.id == offering_id:
                    return o
        return None

    def __len__(self) -> int:
        return sum(len(g) for g in self.offerings.values())


def offerings_for_segment(frm: str, to: str, snapshot: RegistrySnapshot) -> list[SlaOffering]:
    return snapshot.offerings_for_segment(frm, to)


def _group(offerings: Iterable[SlaOffering]) -> dict[Segment, tuple[SlaOffering, ...]]:
    groups: dict[Segment, list[SlaOffering]] = {}
    for o in offerings:
        groups.setdefault(o.segment, []).append(o)
    return {seg: tuple(sorted(g, key=lambda o: o.id)) for seg, g in sorted(groups.items())}


@dataclass(frozen=True)
class RegisterOutcome:
    status: str
    offering_id: str
    version: int
    replaced: tuple[str, ...] = ()
    dominated_by: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.status != PRUNED_DOMINATED


@dataclass(frozen=True)
class RemoveOutcome:
    offering_id: str
    segment: Segment
    version: int


class Registry:
    """Mutable registry front: serialized writers, lock-free snapshot readers.

    ``credentials`` maps domain -> shared secret.  ``on_commit`` is called
    with each new snapshot while the write lock is held, before it is
    published; if it raises, the mutation is abandoned.
    """

    def __init__(self, snapshot: RegistrySnapshot, credentials: Mapping[str, str] | None = None,
                 on_commit: Callable[[RegistrySnapshot], None] | None = None, history: int = 4096):
        self._snapshot = snapshot
        self._credentials = dict(credentials or {})
        self._on_commit = on_commit
        self._lock = threading.Lock()
        self._log: deque[tuple[int, Segment]] = deque(maxlen=history)

    @classmethod
    def empty(cls, graph: DomainGraph, schema: ParameterSchema, **kwargs) -> Registry:
        return cls(RegistrySnapshot(0, graph, schema, {}), **kwargs)

    def snapshot(self) -> RegistrySnapshot:
        return self._snapshot

    @property
    def version(self) -> int:
        return self._snapshot.version

    def _authorize(self, domain: str, secret: str | None) -> None:
        expected = self._credentials.get(domain)
        if expected is None or secret is None or not hmac.compare_digest(expected.encode(), secret.encode()):
            raise Unauthorized(f"credential does not authorize domain {domain!r}")

    def _commit(self, snap: RegistrySnapshot, segment: Segment) -> None:
        if self._on_commit is not None:
            self._on_commit(snap)
        self._snapshot = snap
        self._log.append((snap.version, segment))

    def register_offering(self, offering: SlaOffering, secret: str | None) -> RegisterOutcome:
        with self._lock:
            snap = self._snapshot
            self._authorize(offering.registered_by, secret)
            validate_offering(offering, snap.graph, snap.schema)
            if snap.find(offering.id) is not None:
                raise DuplicateOffering(f"offering id {offering.id!r} already registered")
            existing = snap.offerings.get(offering.segment, ())
            dominators = tuple(o.id for o in existing if pareto_dominates(o, offering, snap.schema))
            if dominators:
                return RegisterOutcome(PRUNED_DOMINATED, offering.id, snap.version, dominated_by=dominators)
            replaced = tuple(o.id for o in existing if pareto_dominates(offering, o, snap.schema))
            version = snap.version + 1
            kept = [o for o in existing if o.id not in replaced]
            kept.append(replace(offering, updated_at=version))
            offerings = dict(snap.offerings)
            offerings[offering.segment] = tuple(sorted(kept, key=lambda o: o.id))
            self._commit(replace(snap, version=version, offerings=offerings), offering.segment)
            status = REPLACED_EXISTING if replaced else ACCEPTED
            return RegisterOutcome(status, offering.id, version, replaced=replaced)

    def remove_offering(self, offering_id: str, secret: str | None) -> RemoveOutcome:
        with self._lock:
            snap = self._snapshot
            target = snap.find(offering_id)
            if target is None:
                raise OfferingNotFound(f"no offering with id {offering_id!r}")
            self._authorize(target.from_domain, secret)
            version = snap.version + 1
            offerings = dict(snap.offerings)
            rest = tuple(o for o in offerings[target.segment] if o.id != offering_id)
            if rest:
                offerings[target.segment] = rest
            else:
                del offerings[target.segment]
            self._commit(replace(snap, version=version, offerings=offerings), target.segment)
            return RemoveOutcome(offering_id, target.segment, version)

    def read_back(self, domain: str, secret: str | None) -> list[SlaOffering]:
        """The caller's own offerings, values included."""
        self._authorize(domain, secret)
        return [o for o in self._snapshot.all_offerings() if o.from_domain == domain]

    def changes_since(self, version: int) -> set[Segment] | None:
        """Segments mutated after ``version``; None if the log no longer reaches back that far."""
        current = self._snapshot.version
        if version == current:
            return set()
        log = list(self._log)
        if not log or version > current or log[0][0] > version + 1:
            return None
        return {seg for v, seg in log if v > version}

    def new_offering_id(self, frm: str, to: str) -> str:
        snap = self._snapshot
        n = snap.version + 1
        while snap.find(f"{frm}-{to}-{n}") is not None:
            n += 1
        return f"{frm}-{to}-{n}"


# -- documents -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    offering_id: str | None
    message: str

    def __str__(self) -> str:
        return f"{self.offering_id}: {self.message}" if self.offering_id else self.message


def _num(v: float) -> int | float:
    if isinstance(v, float) and v.is_integer() and abs(v) < 2**53:
        return int(v)
    return v


def value_to_json(v: ParamValue) -> Any:
    if isinstance(v, Scalar):
        return _num(v.value)
    return {"mean": _num(v.mean), "var": _num(v.variance)}


def value_from_json(raw: Any, decl: ParameterDecl) -> ParamValue:
    if decl.composition is Composition.ADDITIVE:
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValueError(f"parameter {decl.name!r} needs a number, got {raw!r}")
        return Scalar(raw)
    if not isinstance(raw, dict) or set(raw) != {"mean", "var"}:
        raise ValueError(f"parameter {decl.name!r} needs {{mean, var}}, got {raw!r}")
    for k in ("mean", "var"):
        if isinstance(raw[k], bool) or not isinstance(raw[k], (int, float)):
            raise ValueError(f"parameter {decl.name!r}: {k} must be a number")
    return Normal(raw["mean"], raw["var"])


def schema_to_json(schema: ParameterSchema) -> list[dict]:
    return [{"name": p.name, "unit": p.unit, "composition": p.composition.value,
             "sense": p.sense.value, "extraction": p.extraction.value} for p in schema]


def schema_from_json(raw: Any) -> ParameterSchema:
    if not isinstance(raw, list):
        raise ValueError("'schema' must be a list")
    decls = []
    for p in raw:
        if not isinstance(p, dict) or "name" not in p:
            raise ValueError(f"malformed schema entry {p!r}")
        decls.append(ParameterDecl(p["name"], p.get("unit", ""), p.get("composition", "additive"),
                                   p.get("sense", "lower_better"), p.get("extraction", "value")))
    return ParameterSchema(tuple(decls))


def offering_to_json(o: SlaOffering) -> dict:
    return {"id": o.id, "from": o.from_domain, "to": o.to_domain, "label": o.label,
            "values": [value_to_json(v) for v in o.values], "updated_at": o.updated_at}


def offering_from_json(raw: Any, schema: ParameterSchema) -> SlaOffering:
    if not isinstance(raw, dict):
        raise ValueError(f"offering must be an object, got {raw!r}")
    missing = {"id", "from", "to", "values"} - set(raw)
    if missing:
        raise ValueError(f"offering missing keys {sorted(missing)}")
    for k in ("id", "from", "to"):
        if not isinstance(raw[k], str):
            raise ValueError(f"offering {k!r} must be a string")
    vals = raw["values"]
    if not isinstance(vals, list) or len(vals) != len(schema):
        raise ValueError(f"expected {len(schema)} values")
    values = tuple(value_from_json(v, d) for v, d in zip(vals, schema))
    return SlaOffering(raw["id"], raw["from"], raw["to"], values, label=str(raw.get("label", "")),
                       updated_at=int(raw.get("updated_at", 0)))


def snapshot_to_document(snap: RegistrySnapshot) -> dict:
    return {
        "version": snap.version,
        "schema": schema_to_json(snap.schema),
        "domains": sorted(snap.graph.domains),
        "edges": [list(e) for e in sorted(snap.graph.edges)],
        "offerings": [offering_to_json(o) for o in snap.all_offerings()],
    }


def save_registry(snap: RegistrySnapshot) -> str:
    """Canonical JSON text: sorted keys, offerings by (from, to, id), integral numbers without '.0'."""
    return json.dumps(snapshot_to_document(snap), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _parse_document(doc: Any) -> tuple[RegistrySnapshot | None, list[SlaOffering], list[Violation]]:
    """Structural parse; returns (skeleton snapshot, offerings, violations) without dominance checks."""
    if not isinstance(doc, dict):
        return None, [], [Violation(None, "document must be a JSON object")]
    missing = {"schema", "domains", "edges", "offerings"} - set(doc)
    if missing:
        return None, [], [Violation(None, f"missing top-level keys {sorted(missing)}")]
    try:
        schema = schema_from_json(doc["schema"])
        domains = doc["domains"]
        if not isinstance(domains, list) or not all(isinstance(d, str) for d in domains):
            raise ValueError("'domains' must be a list of strings")
        edges = doc["edges"]
        if not isinstance(edges, list) or not all(
                isinstance(e, list) and len(e) == 2 and all(isinstance(d, str) for d in e) for e in edges):
            raise ValueError("'edges' must be a list of [from, to] string pairs")
        graph = DomainGraph(frozenset(domains), frozenset(tuple(e) for e in edges))
        version = doc.get("version", 0)
        if isinstance(version, bool) or not isinstance(version, int) or version < 0:
            raise ValueError("'version' must be a non-negative integer")
    except (ValueError, QosError) as exc:
        return None, [], [Violation(None, str(exc))]
    if not isinstance(doc["offerings"], list):
        return None, [], [Violation(None, "'offerings' must be a list")]

    violations: list[Violation] = []
    offerings: list[SlaOffering] = []
    seen: set[str] = set()
    for i, raw in enumerate(doc["offerings"]):
        oid = raw.get("id") if isinstance(raw, dict) else None
        label = oid if isinstance(oid, str) else f"offerings[{i}]"
        try:
            o = offering_from_json(raw, schema)
            validate_offering(o, graph, schema)
        except (ValueError, TypeError, QosError) as exc:
            violations.append(Violation(label, str(exc)))
            continue
        if o.id in seen:
            violations.append(Violation(o.id, "duplicate offering id"))
            continue
        seen.add(o.id)
        offerings.append(o)
    return RegistrySnapshot(version, graph, schema, {}), offerings, violations


def dominance_violations(offerings: Iterable[SlaOffering], schema: ParameterSchema) -> list[Violation]:
    out = []
    for seg, group in _group(offerings).items():
        keys = [dominance_key(o, schema) for o in group]
        for i, o in enumerate(group):
            by = [group[j].id for j in range(len(group)) if j != i and key_dominates(keys[j], keys[i])]
            if by:
                out.append(Violation(o.id, f"dominated on {seg[0]}->{seg[1]} by {', '.join(by)}"))
    return out


def validate_document(doc: Any) -> list[Violation]:
    """Every problem in a parsed document: structure, references, schema, frontier property."""
    skeleton, offerings, violations = _parse_document(doc)
    if skeleton is None:
        return violations
    return violations + dominance_violations(offerings, skeleton.schema)


def load_registry(document: str | bytes | dict, *, prune: bool = False) -> RegistrySnapshot:
    """Build a snapshot from document text (or an already-decoded dict).

    Dominated entries are an error unless ``prune`` is set, in which case
    they are dropped.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise DocumentError([Violation(None, f"malformed JSON: {exc}")]) from exc
    skeleton, offerings, violations = _parse_document(document)
    if violations:
        raise DocumentError(violations)
    dominated = dominance_violations(offerings, skeleton.schema)
    if dominated and not prune:
        raise DocumentError(dominated)
    if dominated:
        drop = {v.offering_id for v in dominated}
        logger.info("pruned dominated offerings: %s", ", ".join(sorted(drop)))
        offerings = [o for o in offerings if o.id not in drop]
    return replace(skeleton, offerings=_group(offerings))


def read_registry_file(path: str | os.PathLike, *, prune: bool = False) -> RegistrySnapshot:
    return load_registry(Path(path).read_text(encoding="utf-8"), prune=prune)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_registry_file(path: str | os.PathLike, snap: RegistrySnapshot) -> None:
    atomic_write_text(path, save_registry(snap))


def file_backed_registry(path: str | os.PathLike, credentials: Mapping[str, str] | None = None) -> Registry:
    """Registry loaded from ``path`` that rewrites the file atomically on every mutation."""
    snap = read_registry_file(path)
    return Registry(snap, credentials, on_commit=lambda s: write_registry_file(path, s))
