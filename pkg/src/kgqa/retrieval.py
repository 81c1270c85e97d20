"""The retrieval stage: beam-search relation-path retrieval, grounding of
relation paths into reasoning paths, and top-K path ranking.

Beam search runs per topic entity over both edge directions. Candidate
relations at each hop are the union of outgoing and incoming relations of
the current frontier entities; each extension is scored by question-vs-
relation relevance and a path's score is the sum of its hop scores. All
internal orderings are canonical, so results do not depend on set
iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .kg import Entity, GraphBackend
from .paths import (
    PathStep,
    ReasoningPath,
    RelationHop,
    RelationPath,
    ScoredPath,
    path_text,
)
from .relevance import ScoreRequest, ScorerBackend, score_batch


@dataclass(frozen=True)
class RetrievalConfig:
    """Knobs for the retrieval stage.

    ``num_relation_paths`` bounds relation paths kept per topic,
    ``top_k_paths`` the globally ranked reasoning paths handed to the
    judge, and ``top_n_relations`` the retriever pre-filter during
    exploration.
    """

    beam_width: int = 10
    max_hops: int = 2
    num_relation_paths: int = 10
    instantiation_cap: int = 20
    top_k_paths: int = 10
    top_n_relations: int = 30

    def __post_init__(self):
        for name in (
            "beam_width",
            "max_hops",
            "num_relation_paths",
            "instantiation_cap",
            "top_k_paths",
            "top_n_relations",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


def _hops_key(hops: tuple[RelationHop, ...]) -> tuple:
    return tuple((h.relation, h.inverse) for h in hops)


def _beam_key(item: tuple[tuple[RelationHop, ...], frozenset[str], float]) -> tuple:
    # canonical order: best score, then forward-leaning, then lexicographic
    hops, _, score = item
    return (-score, sum(h.inverse for h in hops), _hops_key(hops))


def _candidate_hops(graph: GraphBackend, frontier: frozenset[str]) -> list[RelationHop]:
    cands: set[RelationHop] = set()
    for eid in frontier:
        cands.update(RelationHop(r, False) for r in graph.out_relations(eid))
        cands.update(RelationHop(r, True) for r in graph.in_relations(eid))
    return sorted(cands, key=lambda h: (h.relation, h.inverse))


def _advance(graph: GraphBackend, frontier: frozenset[str], hop: RelationHop) -> frozenset[str]:
    nxt: set[str] = set()
    for eid in frontier:
        found = graph.tail_entities(eid, hop.relation) if not hop.inverse \
            else graph.head_entities(eid, hop.relation)
        nxt.update(e.id for e in found)
    return frozenset(nxt)


def retrieve_relation_paths(
    question: str,
    topics: Sequence[Entity],
    graph: GraphBackend,
    scorer: ScorerBackend,
    cfg: RetrievalConfig,
) -> list[RelationPath]:
    """Beam-search relation paths per topic, keeping the best
    ``num_relation_paths`` per topic by accumulated score.

    Every emitted path's prefixes were themselves beam survivors, and the
    zero-hop path is always a candidate (it is all a topic with no
    incident relations produces).
    """
    if not topics:
        raise ValueError("retrieve_relation_paths requires at least one topic")
    results: list[RelationPath] = []
    score_cache: dict[str, float] = {}
    for topic in topics:
        # beam items: (hops, frontier, accumulated score)
        beam: list[tuple[tuple[RelationHop, ...], frozenset[str], float]] = [
            ((), frozenset([topic.id]), 0.0)
        ]
        collected = list(beam)
        for _ in range(cfg.max_hops):
            extensions: list[tuple[tuple[RelationHop, ...], frozenset[str], float]] = []
            for hops, frontier, score in beam:
                for hop in _candidate_hops(graph, frontier):
                    if hop.relation not in score_cache:
                        score_cache[hop.relation] = score_batch(
                            [ScoreRequest(question, hop.relation, "relation")], scorer
                        )[0]
                    extensions.append(
                        (
                            hops + (hop,),
                            _advance(graph, frontier, hop),
                            score + score_cache[hop.relation],
                        )
                    )
            if not extensions:
                break
            extensions.sort(key=_beam_key)
            beam = extensions[: cfg.beam_width]
            collected.extend(beam)
        collected.sort(key=_beam_key)
        paths = [RelationPath(topic, hops, score) for hops, _, score in collected]
        results.extend(paths[: cfg.num_relation_paths])
    return results


def instantiate_reasoning_paths(
    rp: RelationPath, graph: GraphBackend, cap: int = 20
) -> list[ReasoningPath]:
    """Ground a relation path into concrete walks, in canonical entity
    order, up to ``cap`` walks. Walks that dead-end early are dropped."""
    if cap < 1:
        raise ValueError("cap must be a positive integer")
    out: list[ReasoningPath] = []

    def walk(path: ReasoningPath, depth: int) -> bool:
        if len(out) >= cap:
            return False
        if depth == len(rp.hops):
            out.append(path)
            return True
        hop = rp.hops[depth]
        nxt = (
            graph.tail_entities(path.end, hop.relation)
            if not hop.inverse
            else graph.head_entities(path.end, hop.relation)
        )
        for e in sorted(nxt, key=lambda x: x.id):
            if not walk(path.extend(PathStep(hop.relation, e, hop.inverse)), depth + 1):
                return False
        return True

    walk(ReasoningPath(graph.entity(rp.topic)), 0)
    return out


def dedup_paths(paths: Sequence[ReasoningPath]) -> list[ReasoningPath]:
    """Drop duplicate step sequences, keeping first occurrences."""
    seen: set[tuple] = set()
    out = []
    for p in paths:
        key = (p.topic.id, tuple((s.relation, s.entity.id, s.inverse) for s in p.steps))
        if key in seen:
            continue
        seen.add(key)
        out.append(p)
    return out


def rank_paths(
    question: str,
    paths: Sequence[ReasoningPath],
    scorer: ScorerBackend,
    k: int,
) -> list[ScoredPath]:
    """Score deduplicated paths (question vs arrow chain) and return the
    top ``k`` sorted by non-increasing score; ties keep input order."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    unique = dedup_paths(paths)
    if not unique:
        return []
    scores = score_batch(
        [ScoreRequest(question, path_text(p), "path") for p in unique], scorer
    )
    scored = [ScoredPath(p, s) for p, s in zip(unique, scores)]
    scored.sort(key=lambda sp: -sp.score)  # stable: ties keep input order
    return scored[:k]


def retrieve_ranked_paths(
    question: str,
    topics: Sequence[Entity],
    graph: GraphBackend,
    scorer: ScorerBackend,
    cfg: RetrievalConfig,
) -> list[ScoredPath]:
    """Full retrieval: relation-path beam search, grounding, then ranking."""
    relation_paths = retrieve_relation_paths(question, topics, graph, scorer, cfg)
    reasoning_paths: list[ReasoningPath] = []
    for rp in relation_paths:
        reasoning_paths.extend(
            instantiate_reasoning_paths(rp, graph, cfg.instantiation_cap)
        )
    return rank_paths(question, reasoning_paths, scorer, cfg.top_k_paths)
