"""Retrieval stage: beam search against a brute-force enumerator oracle,
grounding of relation paths, linearization shape, and ranking against an
independent sort-then-truncate oracle."""

from __future__ import annotations

import random

import pytest

from kgqa.kg import Entity, TripleGraph
from kgqa.paths import PathStep, ReasoningPath, RelationHop, RelationPath, linearize, path_text
from kgqa.relevance import LexicalScorer
from kgqa.retrieval import (
    RetrievalConfig,
    dedup_paths,
    instantiate_reasoning_paths,
    rank_paths,
    retrieve_relation_paths,
)
from kgqa.text import jaccard

BIG = 10**6


def enumerate_relation_paths(question, topic, graph, max_hops):
    """Brute-force oracle: all groundable relation-hop sequences up to
    ``max_hops``, scored by summed question-relation Jaccard, computed by
    scanning the raw triple set level by level."""
    triples = {(t.head.id, t.relation, t.tail.id) for t in graph.triples()}
    level = [((), frozenset([topic]), 0.0)]
    results = list(level)
    for _ in range(max_hops):
        nxt = []
        for hops, frontier, score in level:
            cands = set()
            for e in frontier:
                cands.update((r, False) for h, r, t in triples if h == e and t != e)
                cands.update((r, True) for h, r, t in triples if t == e and h != e)
            for rel, inverse in sorted(cands):
                if inverse:
                    new_frontier = frozenset(
                        h for h, r, t in triples if r == rel and t in frontier
                    )
                else:
                    new_frontier = frozenset(
                        t for h, r, t in triples if r == rel and h in frontier
                    )
                nxt.append(
                    (hops + ((rel, inverse),), new_frontier, score + jaccard(question, rel))
                )
        results.extend(nxt)
        level = nxt
    return {(hops, score) for hops, _, score in results}


def _as_key_set(relation_paths):
    return {
        (tuple((h.relation, h.inverse) for h in rp.hops), rp.score)
        for rp in relation_paths
    }


def test_chain_graph_beam_width_one():
    g = TripleGraph([("a", "r1", "b"), ("b", "r2", "c")])
    cfg = RetrievalConfig(beam_width=1, max_hops=2, num_relation_paths=BIG)
    found = retrieve_relation_paths("q", [Entity("a")], g, LexicalScorer(), cfg)
    keys = {tuple((h.relation, h.inverse) for h in rp.hops) for rp in found}
    assert keys == {(), (("r1", False),), (("r1", False), ("r2", False))}


def test_topic_without_relations_yields_zero_hop_path():
    g = TripleGraph([("x", "r", "y")])
    cfg = RetrievalConfig(beam_width=4, max_hops=2, num_relation_paths=BIG)
    found = retrieve_relation_paths("q", [Entity("lonely")], g, LexicalScorer(), cfg)
    assert len(found) == 1
    assert found[0].hops == () and found[0].score == 0.0


def test_requires_topics():
    with pytest.raises(ValueError):
        retrieve_relation_paths("q", [], TripleGraph(), LexicalScorer(), RetrievalConfig())


def _random_graph(rng, n_entities, n_relations, n_triples):
    entities = [f"e{i}" for i in range(n_entities)]
    relations = [f"rel.{w}" for w in
                 ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"][:n_relations]]
    triples = {
        (rng.choice(entities), rng.choice(relations), rng.choice(entities))
        for _ in range(n_triples)
    }
    return TripleGraph(sorted(triples)), entities, relations


def test_wide_beam_equals_exhaustive_enumeration():
    """With a beam wide enough to never prune, retrieval must equal the
    brute-force hop-bounded enumerator exactly."""
    rng = random.Random(42)
    for case in range(8):
        graph, entities, relations = _random_graph(
            rng, rng.randint(3, 25), rng.randint(1, 6), rng.randint(3, 60)
        )
        topic = rng.choice(entities)
        question = " ".join(rng.choice(relations).split(".") [-1] for _ in range(3))
        oracle = enumerate_relation_paths(question, topic, graph, max_hops=2)
        cfg = RetrievalConfig(
            beam_width=max(len(oracle), 1), max_hops=2, num_relation_paths=BIG
        )
        found = retrieve_relation_paths(
            question, [Entity(topic)], graph, LexicalScorer(), cfg
        )
        assert _as_key_set(found) == oracle, f"case {case}"


def test_emitted_prefixes_were_beam_survivors():
    rng = random.Random(7)
    graph, entities, _ = _random_graph(rng, 12, 4, 40)
    cfg = RetrievalConfig(beam_width=3, max_hops=3, num_relation_paths=BIG)
    found = retrieve_relation_paths("alpha beta", [Entity(entities[0])], graph,
                                    LexicalScorer(), cfg)
    keys = {tuple((h.relation, h.inverse) for h in rp.hops) for rp in found}
    for key in keys:
        for cut in range(len(key)):
            assert key[:cut] in keys


def test_output_is_independent_of_topic_iteration_order():
    g = TripleGraph([("a", "r1", "b"), ("c", "r2", "d")])
    cfg = RetrievalConfig(beam_width=4, max_hops=1, num_relation_paths=BIG)
    one = retrieve_relation_paths("q", [Entity("a"), Entity("c")], g, LexicalScorer(), cfg)
    two = retrieve_relation_paths("q", [Entity("c"), Entity("a")], g, LexicalScorer(), cfg)
    assert _as_key_set(one) == _as_key_set(two)


def test_instantiate_single_walk():
    g = TripleGraph([("a", "r", "b")])
    rp = RelationPath(Entity("a"), (RelationHop("r"),))
    found = instantiate_reasoning_paths(rp, g)
    assert [path_text(p) for p in found] == ["a → r → b"]


def test_instantiate_branches_into_multiple_paths():
    g = TripleGraph([("a", "r", "b"), ("a", "r", "c")])
    rp = RelationPath(Entity("a"), (RelationHop("r"),))
    assert len(instantiate_reasoning_paths(rp, g)) == 2


def test_instantiate_missing_relation_gives_empty():
    g = TripleGraph([("a", "r", "b")])
    rp = RelationPath(Entity("a"), (RelationHop("absent"),))
    assert instantiate_reasoning_paths(rp, g) == []


def test_instantiate_drops_dead_end_walks():
    g = TripleGraph([("a", "r", "b"), ("a", "r", "c"), ("b", "r2", "d")])
    rp = RelationPath(Entity("a"), (RelationHop("r"), RelationHop("r2")))
    found = instantiate_reasoning_paths(rp, g)
    assert [path_text(p) for p in found] == ["a → r → b → r2 → d"]


def test_instantiate_respects_cap():
    g = TripleGraph([("a", "r", f"b{i}") for i in range(30)])
    rp = RelationPath(Entity("a"), (RelationHop("r"),))
    assert len(instantiate_reasoning_paths(rp, g, cap=5)) == 5


def test_instantiate_follows_inverse_hops():
    g = TripleGraph([("b", "r", "a")])
    rp = RelationPath(Entity("a"), (RelationHop("r", inverse=True),))
    found = instantiate_reasoning_paths(rp, g)
    assert [path_text(p) for p in found] == ["a → ~r → b"]
    assert g.has_triple("b", "r", "a")


def test_instantiated_steps_are_graph_valid():
    rng = random.Random(11)
    graph, entities, _ = _random_graph(rng, 15, 4, 50)
    cfg = RetrievalConfig(beam_width=5, max_hops=3, num_relation_paths=10)
    for topic in entities[:5]:
        for rp in retrieve_relation_paths("alpha", [Entity(topic)], graph, LexicalScorer(), cfg):
            for p in instantiate_reasoning_paths(rp, graph):
                prev = p.topic
                for step in p.steps:
                    if step.inverse:
                        assert graph.has_triple(step.entity, step.relation, prev)
                    else:
                        assert graph.has_triple(prev, step.relation, step.entity)
                    prev = step.entity


def test_linearize_zero_hop():
    p = ReasoningPath(Entity("e1", "Peyton Manning"))
    assert linearize("q?", p) == "q? [SEP] Peyton Manning"


def test_linearize_one_hop_shape():
    p = ReasoningPath(
        Entity("Peyton Manning"), (PathStep("r1", Entity("Archie Manning")),)
    )
    assert linearize("q?", p) == "q? [SEP] Peyton Manning → r1 → Archie Manning"


def test_linearize_element_count():
    p = ReasoningPath(
        Entity("a"), (PathStep("r1", Entity("b")), PathStep("r2", Entity("c")))
    )
    chain = linearize("q?", p, "[SEP]").split(" [SEP] ")[1]
    assert len(chain.split(" → ")) == 2 * len(p.steps) + 1


def test_linearize_custom_separator():
    p = ReasoningPath(Entity("a"))
    assert linearize("q?", p, "</s>") == "q? </s> a"


class MapScorer:
    """Deterministic scorer from a candidate->score table (ties likely)."""

    def __init__(self, table, default=0.0):
        self.table = table
        self.default = default

    def score_batch(self, reqs):
        return [self.table.get(r.candidate, self.default) for r in reqs]


def _rank_oracle(question, paths, scorer, k):
    unique, seen = [], set()
    for p in paths:
        key = (p.topic.id, tuple((s.relation, s.entity.id, s.inverse) for s in p.steps))
        if key not in seen:
            seen.add(key)
            unique.append(p)
    scores = scorer.score_batch(
        [type("R", (), {"question": question, "candidate": path_text(p), "kind": "path"})()
         for p in unique]
    )
    order = sorted(range(len(unique)), key=lambda i: -scores[i])
    return [(unique[i], float(scores[i])) for i in order[:k]]


def test_rank_paths_small_input_returns_all_sorted():
    paths = [
        ReasoningPath(Entity("a"), (PathStep("r", Entity("x")),)),
        ReasoningPath(Entity("a"), (PathStep("r", Entity("y")),)),
    ]
    scorer = MapScorer({path_text(paths[0]): 0.1, path_text(paths[1]): 0.9})
    ranked = rank_paths("q", paths, scorer, k=10)
    assert [sp.path for sp in ranked] == [paths[1], paths[0]]
    assert [sp.score for sp in ranked] == [0.9, 0.1]


def test_rank_paths_lexical_dominance():
    hit = ReasoningPath(Entity("who founded acme"), ())
    miss = ReasoningPath(Entity("zzz"), ())
    ranked = rank_paths("who founded acme", [miss, hit], LexicalScorer(), k=2)
    assert ranked[0].path is hit


def test_rank_paths_dedups_before_ranking():
    p = ReasoningPath(Entity("a"), (PathStep("r", Entity("x")),))
    dup = ReasoningPath(Entity("a"), (PathStep("r", Entity("x")),))
    assert len(rank_paths("q", [p, dup], LexicalScorer(), k=10)) == 1
    assert dedup_paths([p, dup]) == [p]


def test_rank_paths_matches_oracle_on_randomized_cases():
    """1000 randomized cases vs independent sort-then-truncate, exact,
    including stable tie order."""
    rng = random.Random(5)
    for case in range(1000):
        n = rng.randint(0, 12)
        paths = []
        for _ in range(n):
            topic = Entity(f"t{rng.randint(0, 2)}")
            steps = tuple(
                PathStep(f"r{rng.randint(0, 2)}", Entity(f"e{rng.randint(0, 2)}"))
                for _ in range(rng.randint(0, 2))
            )
            paths.append(ReasoningPath(topic, steps))
        table = {path_text(p): rng.choice([0.0, 0.25, 0.5, 1.0]) for p in paths}
        scorer = MapScorer(table)
        k = rng.randint(1, 8)
        ranked = rank_paths("q", paths, scorer, k)
        expected = _rank_oracle("q", paths, scorer, k)
        assert [(sp.path, sp.score) for sp in ranked] == expected, f"case {case}"
        scores = [sp.score for sp in ranked]
        assert scores == sorted(scores, reverse=True)
        assert len(ranked) <= k
