"""Prompt kinds, template loading, and deterministic prompt rendering.

Templates are plain-text package data with ``{slot}`` placeholders; the
``{few_shot}`` slot is filled verbatim from per-kind exemplar files, which
can be overridden with a directory of replacement files. Rendering is
pure: identical (kind, slots) pairs produce byte-identical prompts, and
the same pair hashes to the key the mock LLM is scripted by.
"""

from __future__ import annotations

import hashlib
import json
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import TemplateError


class PromptKind(str, Enum):
    JUDGMENT = "judgment"
    DECOMPOSITION = "decomposition"
    ENTITY_SELECTION = "entity_selection"
    RELATION_EXPLORATION = "relation_exploration"
    ENTITY_EXPLORATION = "entity_exploration"
    ANSWER_GENERATION = "answer_generation"


def slots_hash(kind: PromptKind, slots: Mapping[str, str]) -> str:
    """Stable 16-hex digest of (kind, slots); the mock-script key."""
    payload = json.dumps(
        {"kind": kind.value, "slots": dict(sorted(slots.items()))},
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _read_package_text(relative: str) -> str:
    return (resources.files("kgqa") / relative).read_text(encoding="utf-8")


class PromptLibrary:
    """Loads the six templates plus few-shot blocks and renders prompts."""

    def __init__(self, few_shot_dir: str | Path | None = None):
        self._templates: dict[PromptKind, str] = {}
        self._few_shot: dict[PromptKind, str] = {}
        for kind in PromptKind:
            self._templates[kind] = _read_package_text(f"templates/{kind.value}.txt")
            if few_shot_dir is not None:
                path = Path(few_shot_dir) / f"{kind.value}.txt"
                self._few_shot[kind] = path.read_text(encoding="utf-8").strip()
            else:
                self._few_shot[kind] = _read_package_text(
                    f"templates/few_shot/{kind.value}.txt"
                ).strip()

    def render(self, kind: PromptKind, slots: Mapping[str, str]) -> str:
        values = dict(slots)
        values["few_shot"] = self._few_shot[kind]
        try:
            return self._templates[kind].format(**values)
        except KeyError as exc:
            raise TemplateError(f"{kind.value} template: missing slot {exc}") from exc
        except (IndexError, ValueError) as exc:
            raise TemplateError(f"{kind.value} template: bad placeholder ({exc})") from exc
