"""Synthetic weak-supervision corpus shared by the training tests.

Two question families over fixture companies; the discriminating signal
is the relation inside the path, so a model that learns question-relation
relevance generalizes to held-out companies.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest

FOUNDER_REL = "business.company.founders"
HQ_REL = "organization.organization.headquarters"
NOISE_RELS = [
    "business.company.revenue",
    "business.company.industry",
    "business.company.ticker",
]


def make_pair(i: int) -> dict:
    company = f"company{i}"
    if i % 2 == 0:
        question = f"who founded {company}?"
        positive = f"{company} → {FOUNDER_REL} → person{i}"
    else:
        question = f"where is {company} headquartered?"
        positive = f"{company} → {HQ_REL} → city{i}"
    negative = f"{company} → {NOISE_RELS[i % len(NOISE_RELS)]} → value{i}"
    return {"question": question, "positive": positive, "negative": negative}


def write_corpus(path: Path, indices: range) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for i in indices:
            fh.write(json.dumps(make_pair(i), ensure_ascii=False) + "\n")
    return path


@pytest.fixture(scope="session")
def corpus_paths(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    train = write_corpus(root / "train.jsonl", range(0, 160))
    held_out = write_corpus(root / "held_out.jsonl", range(160, 200))
    return {"train": train, "held_out": held_out}
