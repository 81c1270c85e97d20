"""Reply parsing: fence stripping, schema validation, candidate filtering."""

from __future__ import annotations

import pytest

from kgqa.errors import ReplyParseError
from kgqa.parsing import JudgmentReply, extract_json, filter_selection, parse_json_reply
from kgqa.prompts import PromptKind


def test_parse_plain_judgment():
    reply = parse_json_reply(
        '{"sufficient": true, "answers": ["Minnesota Vikings"]}', PromptKind.JUDGMENT
    )
    assert reply == JudgmentReply(True, ("Minnesota Vikings",))


def test_parse_fenced_equals_unfenced():
    raw = '{"sufficient": false, "answers": []}'
    fenced = f"```json\n{raw}\n```"
    assert parse_json_reply(raw, PromptKind.JUDGMENT) == parse_json_reply(
        fenced, PromptKind.JUDGMENT
    )


def test_parse_with_leading_and_trailing_prose():
    text = 'Sure! Here you go: {"sufficient": true, "answers": ["x"]} Hope that helps.'
    assert parse_json_reply(text, PromptKind.JUDGMENT).answers == ("x",)


def test_parse_no_json_raises_with_raw_text():
    with pytest.raises(ReplyParseError) as err:
        parse_json_reply("no json here", PromptKind.JUDGMENT)
    assert err.value.raw_text == "no json here"


def test_parse_judgment_requires_boolean_sufficient():
    with pytest.raises(ReplyParseError):
        parse_json_reply('{"sufficient": "yes", "answers": []}', PromptKind.JUDGMENT)
    with pytest.raises(ReplyParseError):
        parse_json_reply('{"answers": ["x"]}', PromptKind.JUDGMENT)


def test_parse_judgment_rejects_non_string_answers():
    with pytest.raises(ReplyParseError):
        parse_json_reply('{"sufficient": true, "answers": [1]}', PromptKind.JUDGMENT)


def test_parse_answer_generation_uses_judgment_schema():
    reply = parse_json_reply(
        '{"sufficient": false, "answers": []}', PromptKind.ANSWER_GENERATION
    )
    assert reply == JudgmentReply(False, ())


def test_parse_decomposition_bare_list():
    assert parse_json_reply('["q1?", "q2?"]', PromptKind.DECOMPOSITION) == ["q1?", "q2?"]


def test_parse_decomposition_keyed_object():
    assert parse_json_reply(
        '{"sub_questions": ["q1?"]}', PromptKind.DECOMPOSITION
    ) == ["q1?"]


def test_parse_selection_list():
    assert parse_json_reply('["a", "b"]', PromptKind.ENTITY_SELECTION) == ["a", "b"]
    assert parse_json_reply(
        '{"relations": ["r1"]}', PromptKind.RELATION_EXPLORATION
    ) == ["r1"]


def test_parse_selection_rejects_non_strings():
    with pytest.raises(ReplyParseError):
        parse_json_reply("[1, 2]", PromptKind.ENTITY_SELECTION)


def test_extract_json_picks_first_value():
    assert extract_json('x [1, 2] then {"a": 1}') == [1, 2]


def test_filter_selection_drops_unoffered_items():
    kept, violations = filter_selection(["a", "ghost", "b"], ["a", "b", "c"])
    assert kept == ["a", "b"]
    assert violations == ["ghost"]


def test_filter_selection_dedups_preserving_order():
    kept, violations = filter_selection(["b", "a", "b"], ["a", "b"])
    assert kept == ["b", "a"]
    assert violations == []


def test_filter_selection_accepts_only_offered_members():
    offered = ["x", "y"]
    kept, _ = filter_selection(["y", "z", "x", "w"], offered)
    assert set(kept) <= set(offered)
