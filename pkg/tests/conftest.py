"""Shared fixtures: the offline demo files, graphs, and a minimal SPARQL
endpoint that serves the four fixed query shapes from an in-memory graph."""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from kgqa.dataset import load_dataset
from kgqa.fixtures import VIKING_CONFIG, write_demo
from kgqa.kg import TripleGraph, load_triples
from kgqa.llm import LlmGateway, MockLlm
from kgqa.pipeline import Pipeline
from kgqa.relevance import LexicalScorer
from kgqa.sparql import NS_PREFIX, SPARQL_TEMPLATES


@pytest.fixture(scope="session")
def demo_files(tmp_path_factory):
    return write_demo(tmp_path_factory.mktemp("viking_demo"))


@pytest.fixture(scope="session")
def viking_graph(demo_files):
    return load_triples(demo_files["viking_graph.tsv"], demo_files["viking_labels.tsv"])


@pytest.fixture(scope="session")
def viking_records(demo_files):
    return {r.id: r for r in load_dataset(demo_files["viking_dataset.jsonl"])}


@pytest.fixture()
def viking_mock(demo_files):
    # fresh instance per test so served-call counters start at zero
    return MockLlm.from_script(demo_files["viking_mock.json"])


@pytest.fixture()
def viking_pipeline(viking_graph, viking_mock):
    return Pipeline(
        viking_graph, LexicalScorer(), LlmGateway(viking_mock), config=VIKING_CONFIG
    )


_QUERY_PATTERNS = {
    kind: re.compile(
        "^" + re.escape(template).replace(re.escape("%s"), r"(\S+)") + "$"
    )
    for kind, template in SPARQL_TEMPLATES.items()
}


class MiniSparqlHandler(BaseHTTPRequestHandler):
    """Answers exactly the four template shapes from ``server.graph``."""

    def log_message(self, *args):  # keep test output quiet
        pass

    def do_GET(self):
        query = parse_qs(urlparse(self.path).query).get("query", [""])[0]
        for kind, pattern in _QUERY_PATTERNS.items():
            match = pattern.match(query)
            if match:
                self._answer(kind, match.groups())
                return
        self.send_response(400)
        self.end_headers()

    def _answer(self, kind: str, groups: tuple[str, ...]):
        graph: TripleGraph = self.server.graph  # type: ignore[attr-defined]
        if kind == "rel_out":
            var, values = "relation", sorted(graph.out_relations(groups[0]))
        elif kind == "rel_in":
            var, values = "relation", sorted(graph.in_relations(groups[0]))
        elif kind == "tail":
            entity, relation = groups
            var = "tailEntity"
            values = sorted(e.id for e in graph.tail_entities(entity, relation))
        else:
            relation, entity = groups
            var = "tailEntity"
            values = sorted(e.id for e in graph.head_entities(entity, relation))
        bindings = [
            {var: {"type": "uri", "value": NS_PREFIX + v}} for v in values
        ]
        body = json.dumps({"results": {"bindings": bindings}}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/sparql-results+json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def sparql_server():
    """Factory: start a mini endpoint over a TripleGraph, yield its URL."""
    servers = []

    def start(graph: TripleGraph) -> str:
        server = ThreadingHTTPServer(("127.0.0.1", 0), MiniSparqlHandler)
        server.graph = graph  # type: ignore[attr-defined]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}/sparql"

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
