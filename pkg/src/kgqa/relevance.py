"""Relevance scoring used by retrieval, ranking, and relation filtering,
plus weak-supervision path labeling and training-pair export.

Two scorer backends share one contract: the built-in lexical scorer
(token Jaccard, dependency-free, deterministic) and a remote HTTP scorer
speaking ``POST {kind, question, candidates} -> {scores}``. Scores are
comparable only within one backend.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Protocol, Sequence

import requests

from .errors import ScoringError, TransportError
from .paths import ReasoningPath, path_text
from .text import jaccard, normalize_answer

SCORE_KINDS = ("relation", "path")


@dataclass(frozen=True)
class ScoreRequest:
    """One candidate to score against a question. ``kind`` tells learned
    backends which scoring head to use."""

    question: str
    candidate: str
    kind: str = "relation"

    def __post_init__(self):
        if not self.question or not self.candidate:
            raise ValueError("question and candidate must be non-empty")
        if self.kind not in SCORE_KINDS:
            raise ValueError(f"kind must be one of {SCORE_KINDS}, got {self.kind!r}")


class ScorerBackend(Protocol):
    def score_batch(self, requests: Sequence[ScoreRequest]) -> list[float]: ...


def score_batch(reqs: Sequence[ScoreRequest], scorer: ScorerBackend) -> list[float]:
    """Score a batch, enforcing the contract: non-empty input, one finite
    score per request, order-aligned."""
    if not reqs:
        raise ValueError("score_batch requires a non-empty request list")
    scores = scorer.score_batch(reqs)
    if len(scores) != len(reqs):
        raise ScoringError(
            f"scorer returned {len(scores)} scores for {len(reqs)} requests"
        )
    for s in scores:
        if not math.isfinite(s):
            raise ScoringError(f"scorer returned a non-finite score: {s!r}")
    return [float(s) for s in scores]


class LexicalScorer:
    """Case-folded, punctuation-stripped token Jaccard between question and
    candidate. Pure function of its inputs."""

    def score_batch(self, reqs: Sequence[ScoreRequest]) -> list[float]:
        return [jaccard(r.question, r.candidate) for r in reqs]


class RemoteScorer:
    """Client for the remote scorer protocol.

    Requests are grouped by (kind, question) into one POST each; replies
    are reassembled in input order.
    """

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout

    def _post(self, kind: str, question: str, candidates: list[str]) -> list[float]:
        body = {"kind": kind, "question": question, "candidates": candidates}
        try:
            resp = requests.post(self.url, json=body, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise TransportError(f"remote scorer {self.url}: {exc}") from exc
        scores = payload.get("scores")
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise ScoringError(f"remote scorer returned a malformed reply: {payload!r}")
        return scores

    def score_batch(self, reqs: Sequence[ScoreRequest]) -> list[float]:
        groups: dict[tuple[str, str], list[int]] = {}
        for i, r in enumerate(reqs):
            groups.setdefault((r.kind, r.question), []).append(i)
        out: list[float] = [0.0] * len(reqs)
        for (kind, question), positions in groups.items():
            scores = self._post(kind, question, [reqs[i].candidate for i in positions])
            for pos, s in zip(positions, scores):
                out[pos] = s
        return out


def path_mentions_answer(path: ReasoningPath, normalized_answers: Collection[str]) -> bool:
    """True if any entity along the path (topic included) matches an answer
    by normalized id or label."""
    for e in path.entities():
        if normalize_answer(e.id) in normalized_answers:
            return True
        if e.label and normalize_answer(e.label) in normalized_answers:
            return True
    return False


def label_paths(
    paths: Sequence[ReasoningPath], answers: Collection[str]
) -> tuple[list[ReasoningPath], list[ReasoningPath]]:
    """Weak supervision: a path is positive iff an answer entity lies
    anywhere along it. Returns (positives, negatives), partitioning the
    input in order."""
    norm = {normalize_answer(a) for a in answers}
    norm.discard("")
    positives, negatives = [], []
    for p in paths:
        (positives if path_mentions_answer(p, norm) else negatives).append(p)
    return positives, negatives


def export_training_pairs(
    items: Iterable[tuple[str, Sequence[ReasoningPath], Collection[str]]],
    out_path: str | Path,
    manifest_path: str | Path | None = None,
    max_pairs_per_question: int = 16,
    seed: int = 0,
) -> dict:
    """Write ranker training pairs as JSONL records
    ``{question, positive, negative}`` (path arrow-chain texts).

    Per question, positives are crossed with negatives; when the cross
    product exceeds the per-question cap a deterministic seeded sample is
    taken. Questions lacking a positive or a negative are skipped and
    counted in the returned (and optionally written) manifest.
    """
    if max_pairs_per_question < 1:
        raise ValueError("max_pairs_per_question must be >= 1")
    rng = random.Random(seed)
    manifest = {
        "questions": 0,
        "emitted_questions": 0,
        "pairs": 0,
        "skipped_no_positive": 0,
        "skipped_no_negative": 0,
        "max_pairs_per_question": max_pairs_per_question,
        "seed": seed,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        for question, paths, answers in items:
            manifest["questions"] += 1
            positives, negatives = label_paths(paths, answers)
            if not positives:
                manifest["skipped_no_positive"] += 1
                continue
            if not negatives:
                manifest["skipped_no_negative"] += 1
                continue
            pos_texts = [path_text(p) for p in positives]
            neg_texts = [path_text(p) for p in negatives]
            pairs = [
                (p, n) for p in pos_texts for n in neg_texts if p != n
            ]
            if len(pairs) > max_pairs_per_question:
                pairs = rng.sample(pairs, max_pairs_per_question)
            if not pairs:
                manifest["skipped_no_negative"] += 1
                continue
            manifest["emitted_questions"] += 1
            for pos, neg in pairs:
                record = {"question": question, "positive": pos, "negative": neg}
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
                manifest["pairs"] += 1
    if manifest_path is not None:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return manifest
