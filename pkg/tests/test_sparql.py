"""SPARQL template rendering (golden-pinned) and remote-backend behavior
against a local endpoint serving the same triples as the in-memory store."""

from __future__ import annotations

from pathlib import Path

import pytest

from kgqa.errors import TransportError
from kgqa.kg import TripleGraph
from kgqa.sparql import SparqlGraph, render_sparql

GOLDEN_DIR = Path(__file__).parent / "golden_sparql"

GOLDEN_INPUTS = [
    ("a", "m.0x", "p.q.r"),
    ("b", "m.0hpq5r4", "sports.sports_team_roster.team"),
    ("c", "m.01mjq", "location.country.capital"),
]


@pytest.mark.parametrize("tag,entity,relation", GOLDEN_INPUTS)
@pytest.mark.parametrize("kind", ["rel_out", "rel_in", "tail", "head"])
def test_render_matches_golden_files(kind, tag, entity, relation):
    rendered = render_sparql(kind, entity, relation if kind in ("tail", "head") else None)
    golden = (GOLDEN_DIR / f"{kind}_{tag}.sparql").read_text(encoding="utf-8")
    assert rendered == golden


def test_render_rel_out_shape():
    q = render_sparql("rel_out", "m.0x")
    assert q.startswith("PREFIX ns: <http://rdf.freebase.com/ns/>")
    assert "SELECT DISTINCT ?relation" in q
    assert "ns:m.0x ?relation ?x ." in q
    assert "FILTER (?x != ns:m.0x)" in q


def test_render_rel_in_shape():
    q = render_sparql("rel_in", "m.0x")
    assert "?x ?relation ns:m.0x ." in q
    assert "FILTER (?x != ns:m.0x)" in q


def test_render_tail_and_head_shapes():
    assert "ns:m.0x ns:p.q.r ?tailEntity ." in render_sparql("tail", "m.0x", "p.q.r")
    assert "?tailEntity ns:p.q.r ns:m.0x ." in render_sparql("head", "m.0x", "p.q.r")


def test_render_is_deterministic():
    assert render_sparql("rel_out", "m.0x") == render_sparql("rel_out", "m.0x")


def test_render_argument_validation():
    with pytest.raises(ValueError):
        render_sparql("tail", "m.0x")  # relation required
    with pytest.raises(ValueError):
        render_sparql("rel_out", "m.0x", "p.q.r")  # relation forbidden
    with pytest.raises(ValueError):
        render_sparql("nope", "m.0x")


MID_TRIPLES = [
    ("m.01", "people.person.father", "m.02"),
    ("m.02", "people.person.children", "m.01"),
    ("m.02", "sports.pro_athlete.teams", "m.03"),
    ("m.02", "sports.pro_athlete.teams", "m.04"),
    ("m.03", "sports.sports_team_roster.team", "m.05"),
    ("m.05", "sports.sports_team.team_mascot", "m.06"),
    ("m.07", "people.person.spouse", "m.07"),  # self-loop
    ("m.07", "people.person.spouse", "m.01"),
]


def test_remote_backend_matches_in_memory(sparql_server):
    """Backend equivalence: every operation returns the same result sets
    over HTTP as the in-memory store does directly."""
    graph = TripleGraph(MID_TRIPLES)
    remote = SparqlGraph(sparql_server(graph))
    entities = sorted({x for t in MID_TRIPLES for x in (t[0], t[2])} | {"m.unknown"})
    relations = sorted({t[1] for t in MID_TRIPLES})
    for e in entities:
        assert remote.out_relations(e) == graph.out_relations(e), e
        assert remote.in_relations(e) == graph.in_relations(e), e
        for r in relations:
            assert remote.tail_entities(e, r) == graph.tail_entities(e, r), (e, r)
            assert remote.head_entities(e, r) == graph.head_entities(e, r), (e, r)


def test_remote_backend_labels_from_local_map(sparql_server):
    graph = TripleGraph(MID_TRIPLES)
    remote = SparqlGraph(sparql_server(graph), labels={"m.05": "Minnesota Vikings"})
    found = remote.tail_entities("m.03", "sports.sports_team_roster.team")
    assert {e.display for e in found} == {"Minnesota Vikings"}


def test_remote_backend_result_cap(sparql_server):
    graph = TripleGraph([("m.01", "r.x", f"m.t{i}") for i in range(10)])
    remote = SparqlGraph(sparql_server(graph), result_cap=3)
    assert len(remote.tail_entities("m.01", "r.x")) == 3


def test_remote_backend_unreachable_raises_transport_error():
    remote = SparqlGraph("http://127.0.0.1:9/sparql", timeout=0.2)
    with pytest.raises(TransportError):
        remote.out_relations("m.01")
