"""Knowledge-graph domain types and the in-memory triple store.

Triples load from tab-separated files (one ``head<TAB>relation<TAB>tail``
per line). An optional label file (``id<TAB>label`` per line) supplies
display names for opaque machine ids; entities without a label display
their raw id. Loaded graphs are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol, Union

from .errors import LoadError


@dataclass(frozen=True, eq=False)
class Entity:
    """A graph node. Identity is the id string alone; labels are cosmetic."""

    id: str
    label: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("entity id must be non-empty")

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Entity):
            return self.id == other.id
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.id)

    @property
    def display(self) -> str:
        return self.label if self.label else self.id


@dataclass(frozen=True)
class Triple:
    """A single (head, relation, tail) fact."""

    head: Entity
    relation: str
    tail: Entity

    def __post_init__(self):
        if not self.relation:
            raise ValueError("relation must be non-empty")


EntityLike = Union[Entity, str]


def entity_id(e: EntityLike) -> str:
    return e.id if isinstance(e, Entity) else e


class GraphBackend(Protocol):
    """Read-only query surface shared by the in-memory and remote backends."""

    def entity(self, e: EntityLike) -> Entity: ...

    def out_relations(self, e: EntityLike) -> set[str]: ...

    def in_relations(self, e: EntityLike) -> set[str]: ...

    def tail_entities(self, e: EntityLike, relation: str) -> set[Entity]: ...

    def head_entities(self, e: EntityLike, relation: str) -> set[Entity]: ...


class TripleGraph:
    """In-memory triple store with per-direction adjacency indexes.

    Accepts ``Triple`` objects or plain ``(head, relation, tail)`` string
    tuples; duplicates are dropped. ``out_relations``/``in_relations``
    exclude relations whose only edge at the entity is a self-loop,
    mirroring the inequality filter of the remote query templates.
    ``tail_entities``/``head_entities`` apply no such filter.
    """

    def __init__(
        self,
        triples: Iterable[Triple | tuple[str, str, str]] = (),
        labels: Mapping[str, str] | None = None,
    ):
        self._labels: dict[str, str] = dict(labels or {})
        self._triples: set[tuple[str, str, str]] = set()
        self._out: dict[str, dict[str, set[str]]] = {}
        self._in: dict[str, dict[str, set[str]]] = {}
        for t in triples:
            if isinstance(t, Triple):
                h, r, tl = t.head.id, t.relation, t.tail.id
                if t.head.label:
                    self._labels.setdefault(t.head.id, t.head.label)
                if t.tail.label:
                    self._labels.setdefault(t.tail.id, t.tail.label)
            else:
                h, r, tl = t
            if not (h and r and tl):
                raise ValueError(f"triple components must be non-empty: {(h, r, tl)!r}")
            if (h, r, tl) in self._triples:
                continue
            self._triples.add((h, r, tl))
            self._out.setdefault(h, {}).setdefault(r, set()).add(tl)
            self._in.setdefault(tl, {}).setdefault(r, set()).add(h)

    def __len__(self) -> int:
        return len(self._triples)

    def triples(self) -> Iterator[Triple]:
        for h, r, t in sorted(self._triples):
            yield Triple(self.entity(h), r, self.entity(t))

    def entity(self, e: EntityLike) -> Entity:
        eid = entity_id(e)
        return Entity(eid, self._labels.get(eid))

    def out_relations(self, e: EntityLike) -> set[str]:
        eid = entity_id(e)
        by_rel = self._out.get(eid, {})
        return {r for r, tails in by_rel.items() if tails - {eid}}

    def in_relations(self, e: EntityLike) -> set[str]:
        eid = entity_id(e)
        by_rel = self._in.get(eid, {})
        return {r for r, heads in by_rel.items() if heads - {eid}}

    def tail_entities(self, e: EntityLike, relation: str) -> set[Entity]:
        eid = entity_id(e)
        return {self.entity(t) for t in self._out.get(eid, {}).get(relation, set())}

    def head_entities(self, e: EntityLike, relation: str) -> set[Entity]:
        eid = entity_id(e)
        return {self.entity(h) for h in self._in.get(eid, {}).get(relation, set())}

    def has_triple(self, head: EntityLike, relation: str, tail: EntityLike) -> bool:
        return (entity_id(head), relation, entity_id(tail)) in self._triples


def load_labels(path: str | Path) -> dict[str, str]:
    """Read an ``id<TAB>label`` file; blank lines are ignored."""
    labels: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip():
                raise LoadError(f"{path}:{lineno}: expected 2 tab-separated fields")
            labels[parts[0].strip()] = parts[1].strip()
    return labels


def load_triples(path: str | Path, label_path: str | Path | None = None) -> TripleGraph:
    """Load a tab-separated triple file into an in-memory graph.

    Raises ``LoadError`` naming the offending line on malformed input.
    An empty file yields a valid empty graph.
    """
    labels = load_labels(label_path) if label_path else None
    triples: list[tuple[str, str, str]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3 or not all(p.strip() for p in parts):
                raise LoadError(
                    f"{path}:{lineno}: expected 3 non-empty tab-separated fields"
                )
            triples.append((parts[0].strip(), parts[1].strip(), parts[2].strip()))
    return TripleGraph(triples, labels=labels)
