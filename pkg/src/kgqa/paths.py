"""Path types: relation paths (relations only) and reasoning paths
(grounded alternating entity/relation chains), plus their text forms.

A reasoning path renders as an arrow chain ``e_t → r_1 → e_1 → … → e_h``
using entity display names. Steps taken against edge direction carry an
``inverse`` flag and render the relation with a ``~`` prefix so the chain
shape stays uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kg import Entity

ARROW = " → "


@dataclass(frozen=True)
class RelationHop:
    """One relation step of a relation path; ``inverse`` means the edge is
    traversed tail-to-head."""

    relation: str
    inverse: bool = False

    @property
    def text(self) -> str:
        return f"~{self.relation}" if self.inverse else self.relation


@dataclass(frozen=True)
class RelationPath:
    """A sequence of relations rooted at a topic entity, with the
    accumulated relevance score assigned during retrieval."""

    topic: Entity
    hops: tuple[RelationHop, ...] = ()
    score: float = 0.0

    def __len__(self) -> int:
        return len(self.hops)


@dataclass(frozen=True)
class PathStep:
    relation: str
    entity: Entity
    inverse: bool = False

    @property
    def relation_text(self) -> str:
        return f"~{self.relation}" if self.inverse else self.relation


@dataclass(frozen=True)
class ReasoningPath:
    """A grounded walk: topic entity followed by (relation, entity) steps.

    Each step must be witnessed by a graph triple — ``(prev, r, e)`` for
    forward steps, ``(e, r, prev)`` for inverse ones.
    """

    topic: Entity
    steps: tuple[PathStep, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def end(self) -> Entity:
        return self.steps[-1].entity if self.steps else self.topic

    def entities(self) -> tuple[Entity, ...]:
        return (self.topic,) + tuple(s.entity for s in self.steps)

    def extend(self, step: PathStep) -> "ReasoningPath":
        return ReasoningPath(self.topic, self.steps + (step,))

    def prefix_through(self, e: Entity | str) -> "ReasoningPath | None":
        """Shortest prefix ending at ``e`` (first occurrence), or None."""
        eid = e.id if isinstance(e, Entity) else e
        if self.topic.id == eid:
            return ReasoningPath(self.topic)
        for i, step in enumerate(self.steps):
            if step.entity.id == eid:
                return ReasoningPath(self.topic, self.steps[: i + 1])
        return None


@dataclass(frozen=True)
class ScoredPath:
    path: ReasoningPath
    score: float


def path_text(p: ReasoningPath) -> str:
    """Arrow-chain form of a reasoning path (no question prefix)."""
    parts = [p.topic.display]
    for step in p.steps:
        parts.append(step.relation_text)
        parts.append(step.entity.display)
    return ARROW.join(parts)


def linearize(question: str, p: ReasoningPath, sep_token: str = "[SEP]") -> str:
    """Ranker input: the question and the arrow chain joined by the
    separator token."""
    return f"{question} {sep_token} {path_text(p)}"
