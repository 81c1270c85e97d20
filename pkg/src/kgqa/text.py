"""Text utilities shared by scoring and metrics: tokenization, Jaccard
similarity, and answer-string normalization."""

from __future__ import annotations

import re
import string

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_WS_RE = re.compile(r"\s+")


def tokenize(text: str) -> frozenset[str]:
    """Case-folded alphanumeric tokens; punctuation acts as a separator."""
    return frozenset(_TOKEN_RE.findall(text.casefold()))


def jaccard(a: str, b: str) -> float:
    """Token-set Jaccard similarity. Two empty token sets count as identical."""
    ta, tb = tokenize(a), tokenize(b)
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def normalize_answer(text: str) -> str:
    """Canonical answer form: case-fold, trim, collapse internal whitespace,
    strip surrounding punctuation."""
    text = _WS_RE.sub(" ", text.casefold().strip())
    return text.strip(string.punctuation + " ")
