"""Benchmark dataset loading.

Datasets are line-delimited JSON records with ``id``, ``question``,
``topic_entities`` (non-empty list of graph ids), and ``answers`` (list of
gold answer strings, possibly empty for unanswerable questions). Gold
answers are normalized at load so matching is insensitive to case,
spacing, and surrounding punctuation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LoadError
from .text import normalize_answer


@dataclass(frozen=True)
class QuestionRecord:
    id: str
    question: str
    topic_entities: tuple[str, ...]
    answers: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.question:
            raise ValueError("question must be non-empty")
        if not self.topic_entities or not all(self.topic_entities):
            raise ValueError("topic_entities must be a non-empty list of ids")

    @property
    def unanswerable(self) -> bool:
        return not self.answers


def load_dataset(path: str | Path) -> list[QuestionRecord]:
    """Load a JSONL dataset; raises ``LoadError`` naming the record index
    for missing or malformed fields."""
    records: list[QuestionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LoadError(f"{path}: record {index}: invalid JSON ({exc})") from exc
            try:
                qid = str(raw["id"])
                question = str(raw["question"])
                topics = tuple(str(t) for t in raw["topic_entities"])
                answers = frozenset(
                    normalize_answer(str(a)) for a in raw.get("answers", [])
                ) - {""}
                records.append(QuestionRecord(qid, question, topics, answers))
            except (KeyError, TypeError, ValueError) as exc:
                raise LoadError(f"{path}: record {index}: {exc}") from exc
    return records
