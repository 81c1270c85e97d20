"""Scoring model: a self-contained hashed bag-of-words encoder with one
scoring head per request kind (relation, path).

The encoder hashes case-folded alphanumeric tokens into a fixed bucket
space and mean-pools their embeddings into the sequence representation the
heads score. Inputs are composed as ``question [SEP] candidate`` and
truncated from the tail, so an overlong candidate loses its path tail
before the question loses anything.
"""

from __future__ import annotations

import json
import re
import zlib
from pathlib import Path

import torch
from torch import nn

KINDS = ("relation", "path")
SEP_TOKEN = "[SEP]"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str, max_len: int | None = None) -> list[str]:
    """Ordered, case-folded alphanumeric tokens; optional tail truncation."""
    tokens = _TOKEN_RE.findall(text.casefold())
    return tokens if max_len is None else tokens[:max_len]


def compose_input(question: str, candidate: str, sep: str = SEP_TOKEN) -> str:
    """The ranker input sequence: question and candidate joined by the
    separator token."""
    return f"{question} {sep} {candidate}"


class HashBowEncoder(nn.Module):
    """Mean-pooled embedding over crc32-hashed token buckets.

    The pooled vector plays the role of the sequence-start representation
    a transformer encoder would produce.
    """

    def __init__(self, vocab_size: int = 4096, dim: int = 64, max_len: int = 64):
        super().__init__()
        self.vocab_size = vocab_size
        self.max_len = max_len
        self.embedding = nn.EmbeddingBag(vocab_size, dim, mode="mean")

    def bucket(self, token: str) -> int:
        return zlib.crc32(token.encode("utf-8")) % self.vocab_size

    def forward(self, texts: list[str]) -> torch.Tensor:
        ids: list[int] = []
        offsets: list[int] = []
        for text in texts:
            offsets.append(len(ids))
            tokens = tokenize(text, self.max_len)
            if not tokens:
                tokens = [SEP_TOKEN.casefold()]
            ids.extend(self.bucket(t) for t in tokens)
        return self.embedding(
            torch.tensor(ids, dtype=torch.long),
            torch.tensor(offsets, dtype=torch.long),
        )


class ScoringModel(nn.Module):
    """Shared encoder with a separate MLP head per request kind."""

    def __init__(self, vocab_size: int = 4096, dim: int = 64, hidden: int = 64,
                 max_len: int = 64, encoder_id: str = "hash-bow"):
        super().__init__()
        if encoder_id != "hash-bow":
            raise ValueError(
                f"unknown encoder {encoder_id!r}; this build ships 'hash-bow'"
            )
        self.hparams = {
            "vocab_size": vocab_size,
            "dim": dim,
            "hidden": hidden,
            "max_len": max_len,
            "encoder_id": encoder_id,
        }
        self.encoder = HashBowEncoder(vocab_size, dim, max_len)
        self.heads = nn.ModuleDict(
            {
                kind: nn.Sequential(
                    nn.Linear(dim, hidden), nn.ReLU(), nn.Linear(hidden, 1)
                )
                for kind in KINDS
            }
        )

    def forward(self, texts: list[str], kind: str) -> torch.Tensor:
        if kind not in self.heads:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        return self.heads[kind](self.encoder(texts)).squeeze(-1)

    @torch.no_grad()
    def score(self, question: str, candidates: list[str], kind: str) -> list[float]:
        """Inference entry: order-aligned scores for one request."""
        if not candidates:
            return []
        self.eval()
        texts = [compose_input(question, c) for c in candidates]
        return [float(s) for s in self.forward(texts, kind)]


def save_model(model: ScoringModel, artifact_dir: str | Path) -> Path:
    out = Path(artifact_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(model.hparams, fh, indent=2, sort_keys=True)
        fh.write("\n")
    torch.save(model.state_dict(), out / "weights.pt")
    return out


def load_model(artifact_dir: str | Path) -> ScoringModel:
    artifact = Path(artifact_dir)
    with open(artifact / "config.json", encoding="utf-8") as fh:
        hparams = json.load(fh)
    model = ScoringModel(**hparams)
    model.load_state_dict(torch.load(artifact / "weights.pt", weights_only=True))
    model.eval()
    return model
