"""Strict-JSON reply parsing for LLM outputs.

Replies may arrive wrapped in code fences or with surrounding prose; the
first JSON value found is decoded and validated against the per-kind
schema. Selection lists are additionally filtered against the candidate
set offered in the prompt — names the model invented are dropped and
counted, never accepted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Sequence

from .errors import ReplyParseError
from .prompts import PromptKind

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+)?\n?(.*?)```", re.DOTALL)

_LIST_KEYS = ("selected", "relations", "entities", "sub_questions", "answers")


@dataclass(frozen=True)
class JudgmentReply:
    sufficient: bool
    answers: tuple[str, ...] = ()


def extract_json(text: str):
    """Decode the first JSON object or array in ``text``, looking inside
    code fences first."""
    candidates = _FENCE_RE.findall(text)
    candidates.append(text)
    decoder = json.JSONDecoder()
    for blob in candidates:
        for match in re.finditer(r"[\[{]", blob):
            try:
                value, _ = decoder.raw_decode(blob[match.start():])
                return value
            except json.JSONDecodeError:
                continue
    raise ReplyParseError("no JSON value found in reply", raw_text=text)


def _as_string_list(value, raw: str) -> list[str]:
    if isinstance(value, dict):
        for key in _LIST_KEYS:
            if key in value:
                value = value[key]
                break
        else:
            raise ReplyParseError(
                f"expected a list reply, got object with keys {sorted(value)}",
                raw_text=raw,
            )
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ReplyParseError("expected a JSON list of strings", raw_text=raw)
    return list(value)


def parse_json_reply(text: str, kind: PromptKind):
    """Parse and validate one reply.

    Returns ``JudgmentReply`` for judgment/answer-generation prompts and
    a list of strings for decomposition and the selection prompts.
    """
    value = extract_json(text)
    if kind in (PromptKind.JUDGMENT, PromptKind.ANSWER_GENERATION):
        if not isinstance(value, dict) or not isinstance(value.get("sufficient"), bool):
            raise ReplyParseError(
                "reply must be an object with a boolean 'sufficient'", raw_text=text
            )
        answers = value.get("answers", [])
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise ReplyParseError("'answers' must be a list of strings", raw_text=text)
        return JudgmentReply(value["sufficient"], tuple(answers))
    return _as_string_list(value, text)


def filter_selection(
    items: Sequence[str], candidates: Sequence[str]
) -> tuple[list[str], list[str]]:
    """Keep items that are members of the offered candidate list, in reply
    order without repeats; everything else is returned as violations."""
    offered = set(candidates)
    kept: list[str] = []
    violations: list[str] = []
    seen: set[str] = set()
    for item in items:
        if item in seen:
            continue
        seen.add(item)
        (kept if item in offered else violations).append(item)
    return kept, violations
