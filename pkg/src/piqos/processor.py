"""The QoS processor: enumerate paths and offering combinations, compose,
filter by constraints and rank by weighted objective.

Ranking is ascending by score (lower is better) with ties broken by the
path, then by the offering ids.  Results can be memoized per registry
version by ``QosCache``.
"""

from __future__ import annotations

import itertools
import logging
import math
import threading
from collections.abc import Sequence
from dataclasses import dataclass, replace

from piqos.calculus import ComposedValues, compose_path, extract_decision_vector
from piqos.command import check_constraints, exact_score, parse_command
from piqos.errors import GraphError, MissingBinding
from piqos.model import DomainGraph, Segment
from piqos.registry import Registry, RegistrySnapshot

logger = logging.getLogger(__name__)

DEFAULT_MAX_HOPS = 8


@dataclass(frozen=True)
class Query:
    origin: str
    destination: str
    command: str
    deadline_hours: float | None = None
    max_hops: int = DEFAULT_MAX_HOPS
    include_disallowed: bool = True
    obfuscate: bool = False


@dataclass(frozen=True)
class PathCandidate:
    """One ranked (path, offering-per-segment) combination.

    ``composed`` and ``x`` are None in obfuscated results; ``score`` is then
    the 0..100 display value.
    """

    path: tuple[str, ...]
    offering_ids: tuple[str, ...]
    composed: ComposedValues | None
    x: tuple[float, ...] | None
    score: float
    allowed: bool


@dataclass(frozen=True)
class RankedResult:
    query: Query
    registry_version: int
    candidates: tuple[PathCandidate, ...]
    obfuscated: bool = False

    def __len__(self) -> int:
        return len(self.candidates)

    def best_allowed(self) -> PathCandidate | None:
        return next((c for c in self.candidates if c.allowed), None)


def enumerate_paths(graph: DomainGraph, origin: str, destination: str,
                    max_hops: int = DEFAULT_MAX_HOPS) -> list[tuple[str, ...]]:
    """All simple directed paths origin..destination with at most ``max_hops`` edges.

    Depth-first over sorted successors, which yields lexicographic order
    since no path is a prefix of another.
    """
    for d in (origin, destination):
        if d not in graph.domains:
            raise GraphError(f"unknown domain {d!r}")
    if origin == destination:
        raise GraphError("origin and destination must differ")
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")

    succ = {d: graph.successors(d) for d in graph.domains}
    paths: list[tuple[str, ...]] = []
    stack = [origin]
    on_path = {origin}

    def walk(node: str) -> None:
        if node == destination:
            paths.append(tuple(stack))
            return
        if len(stack) > max_hops:
            return
        for nxt in succ[node]:
            if nxt in on_path:
                continue
            stack.append(nxt)
            on_path.add(nxt)
            walk(nxt)
            stack.pop()
            on_path.discard(nxt)

    walk(origin)
    return paths


def enumerate_candidates(path: Sequence[str], snapshot: RegistrySnapshot) -> list[tuple[str, ...]]:
    """Cartesian product of the per-segment frontiers, as offering-id tuples."""
    per_segment = [snapshot.offerings_for_segment(a, b) for a, b in zip(path, path[1:])]
    return [tuple(o.id for o in combo) for combo in itertools.product(*per_segment)]


def paths_segments(paths: Sequence[Sequence[str]]) -> frozenset[Segment]:
    return frozenset(s for p in paths for s in zip(p, p[1:]))


def obfuscate_scores(candidates: Sequence[PathCandidate]) -> list[PathCandidate]:
    """Replace scores by round(100 * (s - min) / (max - min)) and withhold raw values.

    Input order is kept, so rounding ties keep the original ranking.
    """
    if not candidates:
        return []
    lo = min(c.score for c in candidates)
    hi = max(c.score for c in candidates)
    span = hi - lo
    out = []
    for c in candidates:
        display = 0 if span == 0 else math.floor(100 * (c.score - lo) / span + 0.5)
        out.append(replace(c, score=float(display), composed=None, x=None))
    return out


def rank(query: Query, snapshot: RegistrySnapshot) -> RankedResult:
    """Rank every (path, offering combination) for the query against one snapshot."""
    schema = snapshot.schema
    cmd = parse_command(query.command, schema)
    if schema.needs_deadline and query.deadline_hours is None:
        raise MissingBinding("this registry's schema requires a deadline")

    rows = []
    for path in enumerate_paths(snapshot.graph, query.origin, query.destination, query.max_hops):
        per_segment = [snapshot.offerings_for_segment(a, b) for a, b in zip(path, path[1:])]
        for combo in itertools.product(*per_segment):
            composed = compose_path([o.values for o in combo], schema)
            dv = extract_decision_vector(composed, schema, query.deadline_hours)
            exact = exact_score(cmd, dv.x, schema)
            ids = tuple(o.id for o in combo)
            cand = PathCandidate(path, ids, composed, dv.x, float(exact), check_constraints(cmd, dv.x))
            rows.append(((exact, path, ids), cand))
    rows.sort(key=lambda r: r[0])
    candidates = [c for _, c in rows if query.include_disallowed or c.allowed]
    if query.obfuscate:
        candidates = obfuscate_scores(candidates)
    return RankedResult(query, snapshot.version, tuple(candidates), query.obfuscate)


@dataclass
class _Entry:
    version: int
    segments: frozenset[Segment]
    result: RankedResult


class QosCache:
    """Memoized ``rank`` keyed by query and registry version.

    A stale entry is reused only when no mutation since its version touched
    a segment on any of the query's enumerated paths (``fine_grained``);
    its version stamp is then advanced.  Otherwise it is recomputed.
    """

    def __init__(self, fine_grained: bool = True, max_entries: int = 4096):
        self.fine_grained = fine_grained
        self.max_entries = max_entries
        self._entries: dict[Query, _Entry] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._entries)

    def cached_rank(self, query: Query, registry: Registry) -> RankedResult:
        snap = registry.snapshot()
        with self._lock:
            entry = self._entries.get(query)
        if entry is not None:
            if entry.version == snap.version:
                self.hits += 1
                return entry.result
            if self.fine_grained and entry.version < snap.version:
                changed = registry.changes_since(entry.version)
                if changed is not None and not (changed & entry.segments):
                    result = replace(entry.result, registry_version=snap.version)
                    self._store(query, _Entry(snap.version, entry.segments, result))
                    self.hits += 1
                    return result
        self.misses += 1
        result = rank(query, snap)
        paths = enumerate_paths(snap.graph, query.origin, query.destination, query.max_hops)
        self._store(query, _Entry(snap.version, paths_segments(paths), result))
        return result

    def _store(self, query: Query, entry: _Entry) -> None:
        with self._lock:
            current = self._entries.get(query)
            if current is not None and current.version > entry.version:
                return
            if query not in self._entries and len(self._entries) >= self.max_entries:
                self._entries.pop(next(iter(self._entries)))
            self._entries[query] = entry

    def invalidate(self, segment: Segment) -> int:
        """Drop entries whose enumerated paths traverse ``segment``; returns how many."""
        with self._lock:
            doomed = [q for q, e in self._entries.items() if segment in e.segments]
            for q in doomed:
                del self._entries[q]
        return len(doomed)

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
