"""Evaluation metrics: Hits@1, per-question set F1 (macro-averaged across
questions), and answer coverage of ranked path lists."""

from __future__ import annotations

from typing import Collection, Sequence

from .paths import ReasoningPath
from .relevance import path_mentions_answer
from .text import normalize_answer


def _norm_set(values: Collection[str]) -> set[str]:
    return {normalize_answer(v) for v in values} - {""}


def hits_at_1(predicted: Sequence[str], gold: Collection[str]) -> int:
    """1 iff the first prediction exactly matches a gold answer after
    normalization; empty predictions score 0."""
    if not predicted:
        return 0
    return int(normalize_answer(predicted[0]) in _norm_set(gold))


def macro_f1(predicted: Collection[str], gold: Collection[str]) -> float:
    """Set F1 between normalized prediction and gold sets. Both empty
    counts as a perfect 1.0; exactly one empty is 0.0."""
    pred, gd = _norm_set(predicted), _norm_set(gold)
    if not pred and not gd:
        return 1.0
    if not pred or not gd:
        return 0.0
    overlap = len(pred & gd)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(gd)
    return 2 * precision * recall / (precision + recall)


def answer_coverage(
    ranked_paths: Sequence[Sequence[ReasoningPath]],
    gold_sets: Sequence[Collection[str]],
    k_values: Sequence[int],
) -> dict[int, float]:
    """For each K, the fraction of records whose top-K paths contain at
    least one gold answer entity."""
    if len(ranked_paths) != len(gold_sets):
        raise ValueError("ranked_paths and gold_sets must be the same length")
    for k in k_values:
        if k < 1:
            raise ValueError("k values must be positive")
    coverage: dict[int, float] = {}
    n = len(ranked_paths)
    for k in k_values:
        if n == 0:
            coverage[k] = 0.0
            continue
        hits = 0
        for paths, gold in zip(ranked_paths, gold_sets):
            norm = _norm_set(gold)
            if any(path_mentions_answer(p, norm) for p in paths[:k]):
                hits += 1
        coverage[k] = hits / n
    return coverage
