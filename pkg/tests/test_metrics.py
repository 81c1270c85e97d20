"""Metrics: Hits@1 and macro F1 on hand-computed cases, coverage
monotonicity, and purity properties."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgqa.kg import Entity
from kgqa.metrics import answer_coverage, hits_at_1, macro_f1
from kgqa.paths import PathStep, ReasoningPath

# (predicted list, gold set, expected hits, expected f1) - f1 hand-computed
CURATED = [
    (["Minnesota Vikings"], {"Minnesota Vikings"}, 1, 1.0),
    ([], {"x"}, 0, 0.0),
    (["minnesota  vikings"], {"Minnesota Vikings"}, 1, 1.0),
    (["wrong", "x"], {"x"}, 0, 2 * 0.5 * 1.0 / 1.5),  # P=1/2, R=1
    (["a", "b"], {"a", "c"}, 1, 0.5),  # P=R=0.5
    ([], set(), 0, 1.0),  # both empty: perfect by convention
    (["x"], set(), 0, 0.0),  # one empty
    (["  X.  "], {"x"}, 1, 1.0),  # normalization strips punctuation/space
    (["a", "a"], {"a"}, 1, 1.0),  # duplicate predictions collapse
    (["b", "a"], {"a"}, 0, 2 * 0.5 * 1.0 / 1.5),  # first prediction misses; P=1/2, R=1
]


@pytest.mark.parametrize("predicted,gold,expected_hits,expected_f1", CURATED)
def test_curated_metric_cases(predicted, gold, expected_hits, expected_f1):
    assert hits_at_1(predicted, gold) == expected_hits
    assert macro_f1(predicted, gold) == pytest.approx(expected_f1, abs=0)


def test_hits_requires_first_position_match():
    assert hits_at_1(["miss", "hit"], {"hit"}) == 0
    assert hits_at_1(["hit", "miss"], {"hit"}) == 1


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from(["a", "b", "c", "d"]), max_size=4),
    st.sets(st.sampled_from(["a", "b", "c", "d"]), max_size=4),
)
def test_metrics_pure_and_gold_order_free(predicted, gold):
    assert hits_at_1(predicted, gold) == hits_at_1(predicted, set(sorted(gold)))
    assert macro_f1(predicted, gold) == macro_f1(list(predicted), frozenset(gold))
    assert 0.0 <= macro_f1(predicted, gold) <= 1.0


def _path(topic, *entities):
    return ReasoningPath(
        Entity(topic), tuple(PathStep("r", Entity(e)) for e in entities)
    )


def test_coverage_full_and_empty():
    paths = [[_path("t", "gold1")], [_path("t", "gold2")]]
    golds = [{"gold1"}, {"gold2"}]
    assert answer_coverage(paths, golds, [1, 5]) == {1: 1.0, 5: 1.0}
    assert answer_coverage(paths, [{"zz"}, {"yy"}], [1, 5]) == {1: 0.0, 5: 0.0}


def test_coverage_counts_topic_entity_too():
    assert answer_coverage([[_path("gold")]], [{"gold"}], [1]) == {1: 1.0}


def test_coverage_respects_k_cutoff():
    paths = [[_path("t", "miss"), _path("t", "gold")]]
    cov = answer_coverage(paths, [{"gold"}], [1, 2])
    assert cov == {1: 0.0, 2: 1.0}


def test_coverage_monotone_in_k_on_randomized_fixtures():
    rng = random.Random(13)
    for case in range(50):
        n = rng.randint(1, 6)
        paths, golds = [], []
        for _ in range(n):
            m = rng.randint(0, 6)
            paths.append(
                [_path("t", f"e{rng.randint(0, 8)}") for _ in range(m)]
            )
            golds.append({f"e{rng.randint(0, 8)}"} if rng.random() < 0.8 else set())
        ks = [1, 2, 3, 5, 8]
        cov = answer_coverage(paths, golds, ks)
        values = [cov[k] for k in ks]
        assert values == sorted(values), f"case {case}: {values}"
        # brute-force recomputation at each K
        for k in ks:
            from kgqa.relevance import path_mentions_answer
            from kgqa.text import normalize_answer

            expected = sum(
                1 for ps, g in zip(paths, golds)
                if any(
                    path_mentions_answer(p, {normalize_answer(x) for x in g})
                    for p in ps[:k]
                )
            ) / n
            assert cov[k] == expected


def test_coverage_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        answer_coverage([[]], [], [1])
    with pytest.raises(ValueError):
        answer_coverage([[]], [set()], [0])
