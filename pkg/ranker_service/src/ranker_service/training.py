"""Margin-ranking training over exported weak-supervision pairs.

Pairs arrive as JSONL ``{question, positive, negative}`` records where the
positive/negative fields are path arrow-chains. Path pairs train the
``path`` head directly; the ``relation`` head trains on pairs of first
relations extracted from the same chains (when they differ), since the
export format carries no relation-level labels of its own.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .model import ScoringModel, compose_input, save_model

ARROW = " → "


def margin_loss(s_pos: float, s_neg: float, margin: float) -> float:
    """Hinge on the score gap: zero exactly when s_pos - s_neg >= margin."""
    if margin <= 0:
        raise ValueError("margin must be positive")
    return max(0.0, s_neg - s_pos + margin)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    margin: float = 1.0
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    encoder_id: str = "hash-bow"
    vocab_size: int = 4096
    dim: int = 64
    hidden: int = 64
    max_len: int = 64

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


@dataclass
class Pair:
    question: str
    positive: str
    negative: str
    kind: str = "path"


def first_relation(chain: str) -> str | None:
    parts = chain.split(ARROW)
    return parts[1] if len(parts) >= 2 else None


def load_pairs(path: str | Path) -> list[Pair]:
    """Read exported path pairs and derive relation-level pairs from the
    chains' first relations."""
    pairs: list[Pair] = []
    with open(path, encoding="utf-8") as fh:
        for index, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                pairs.append(Pair(raw["question"], raw["positive"], raw["negative"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}: record {index}: {exc}") from exc
    derived = []
    for p in pairs:
        pos_rel, neg_rel = first_relation(p.positive), first_relation(p.negative)
        if pos_rel and neg_rel and pos_rel != neg_rel:
            derived.append(Pair(p.question, pos_rel, neg_rel, kind="relation"))
    return pairs + derived


@dataclass
class TrainResult:
    model: ScoringModel
    log: list[dict] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.log[-1]["mean_loss"]


def _batch_loss(model: ScoringModel, batch: list[Pair], margin: float) -> torch.Tensor:
    losses = []
    for kind in ("path", "relation"):
        group = [p for p in batch if p.kind == kind]
        if not group:
            continue
        pos = model([compose_input(p.question, p.positive) for p in group], kind)
        neg = model([compose_input(p.question, p.negative) for p in group], kind)
        losses.append(torch.clamp(neg - pos + margin, min=0.0).sum())
    return sum(losses) / len(batch)


def train(
    pairs_path: str | Path,
    cfg: TrainConfig = TrainConfig(),
    artifact_dir: str | Path | None = None,
    log_path: str | Path | None = None,
) -> TrainResult:
    """Train both heads with the margin ranking objective; optionally save
    the model artifact and a line-delimited epoch log."""
    pairs = load_pairs(pairs_path)
    if not pairs:
        raise ValueError(f"no training pairs in {pairs_path}")
    torch.manual_seed(cfg.seed)
    rng = random.Random(cfg.seed)
    model = ScoringModel(
        vocab_size=cfg.vocab_size,
        dim=cfg.dim,
        hidden=cfg.hidden,
        max_len=cfg.max_len,
        encoder_id=cfg.encoder_id,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    n_relation = sum(1 for p in pairs if p.kind == "relation")
    result = TrainResult(model)
    result.log.append(
        {
            "event": "start",
            "pairs": len(pairs),
            "path_pairs": len(pairs) - n_relation,
            "relation_pairs_derived_from_prefixes": n_relation,
            "config": cfg.__dict__,
        }
    )
    order = list(range(len(pairs)))
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        model.train()
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[start : start + cfg.batch_size]]
            optimizer.zero_grad()
            loss = _batch_loss(model, batch, cfg.margin)
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(batch)
        result.log.append(
            {"event": "epoch", "epoch": epoch, "mean_loss": total / len(pairs)}
        )
    if artifact_dir is not None:
        save_model(model, artifact_dir)
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as fh:
            for record in result.log:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return result
