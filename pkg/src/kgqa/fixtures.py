"""Offline demo fixtures: a small two-question graph with a scripted mock
LLM that replays the intended judgment/exploration behavior.

``q1`` (trading partner) resolves at the judgment stage in a single call;
``q2`` (team mascot) takes two exploration rounds, hopping from the
player's father to the two team-tenure nodes and on to the answer team.
The mock script is produced by running the real pipeline once against a
policy backend and freezing the recorded exchanges, so replayed runs hit
the exact same prompt hashes.
"""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path
from typing import Mapping

from .dataset import load_dataset
from .kg import TripleGraph, load_triples
from .llm import CallbackLlm, LlmGateway, MockLlm, RecordingLlm
from .pipeline import Pipeline, PipelineConfig
from .prompts import PromptKind
from .relevance import LexicalScorer

DEMO_FILES = ("viking_graph.tsv", "viking_labels.tsv", "viking_dataset.jsonl")

# The demo runs entirely on pipeline defaults (2 rounds, K=10, N=30).
VIKING_CONFIG = PipelineConfig()


def copy_demo_data(out_dir: str | Path) -> dict[str, Path]:
    """Copy the packaged graph, labels, and dataset files into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for name in DEMO_FILES:
        target = out / name
        with resources.as_file(resources.files("kgqa") / "demo" / name) as src:
            shutil.copy(src, target)
        written[name] = target
    return written


def _q1_policy(kind: PromptKind, slots: Mapping[str, str]) -> str:
    if kind is PromptKind.JUDGMENT:
        return '{"sufficient": true, "answers": ["Zealandia"]}'
    raise AssertionError(f"q1 should resolve at judgment, got {kind}")


class _Q2Policy:
    """Round-aware replies reproducing the two-round exploration story."""

    def __init__(self):
        self.selection_calls = 0
        self.generation_calls = 0

    def __call__(self, kind: PromptKind, slots: Mapping[str, str]) -> str:
        if kind is PromptKind.JUDGMENT:
            return '{"sufficient": false, "answers": []}'
        if kind is PromptKind.DECOMPOSITION:
            return (
                '{"sub_questions": ["What teams did Payton Manning\'s father play for?", '
                '"What team has a mascot named Viktor the Viking?"]}'
            )
        if kind is PromptKind.ENTITY_SELECTION:
            self.selection_calls += 1
            if self.selection_calls == 1:
                return '["Archie Manning"]'
            return '["m.0hpq5r4", "m.0hpq5rc"]'
        if kind is PromptKind.RELATION_EXPLORATION:
            if slots["entity"] == "Archie Manning":
                return '["sports.pro_athlete.teams"]'
            return '["sports.sports_team_roster.team"]'
        if kind is PromptKind.ENTITY_EXPLORATION:
            triplets = slots["triplets"]
            if "sports.pro_athlete.teams" in triplets:
                return '["m.0hpq5r4", "m.0hpq5rc"]'
            if "(m.0hpq5r4," in triplets:
                return '["Minnesota Vikings"]'
            return '["New Orleans Saints"]'
        if kind is PromptKind.ANSWER_GENERATION:
            self.generation_calls += 1
            if self.generation_calls == 1:
                return '{"sufficient": false, "answers": []}'
            return '{"sufficient": true, "answers": ["Minnesota Vikings"]}'
        raise AssertionError(f"unexpected prompt kind {kind}")


def build_viking_mock(graph: TripleGraph, dataset_path: str | Path) -> MockLlm:
    """Record the scripted Q1/Q2 exchanges into a frozen mock backend."""
    records = {r.id: r for r in load_dataset(dataset_path)}
    recorder = RecordingLlm(CallbackLlm(_q1_policy))
    pipeline = Pipeline(
        graph, LexicalScorer(), LlmGateway(recorder), config=VIKING_CONFIG
    )
    pipeline.answer_question(records["q1"])
    recorder.inner = CallbackLlm(_Q2Policy())
    pipeline.answer_question(records["q2"])
    return recorder.to_mock()


def write_demo(out_dir: str | Path) -> dict[str, Path]:
    """Materialize the full offline demo: data files plus the mock script.

    Returns the path of every file written, keyed by file name.
    """
    written = copy_demo_data(out_dir)
    graph = load_triples(
        written["viking_graph.tsv"], written["viking_labels.tsv"]
    )
    mock = build_viking_mock(graph, written["viking_dataset.jsonl"])
    script = Path(out_dir) / "viking_mock.json"
    mock.save_script(script)
    written["viking_mock.json"] = script
    return written
