"""SPARQL query templates and the remote graph backend.

The four query templates are fixed verbatim (golden-file pinned); entity
and relation ids are substituted into ``%s`` slots. The remote backend
speaks SPARQL 1.1 over HTTP and returns JSON bindings. Result sets are
truncated client-side at a configurable cap so the query bodies stay
byte-identical to the templates.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import requests

from .errors import TransportError
from .kg import Entity, EntityLike, entity_id, load_labels

NS_PREFIX = "http://rdf.freebase.com/ns/"

SPARQL_TEMPLATES = {
    "rel_out": (
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT DISTINCT ?relation\n"
        "WHERE {\n"
        "    ns:%s ?relation ?x .\n"
        "    FILTER (?x != ns:%s)\n"
        "}\n"
    ),
    "rel_in": (
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT DISTINCT ?relation\n"
        "WHERE {\n"
        "    ?x ?relation ns:%s .\n"
        "    FILTER (?x != ns:%s)\n"
        "}\n"
    ),
    "tail": (
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "    ns:%s ns:%s ?tailEntity .\n"
        "}\n"
    ),
    "head": (
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "    ?tailEntity ns:%s ns:%s .\n"
        "}\n"
    ),
}


def render_sparql(template_kind: str, e: EntityLike, r: str | None = None) -> str:
    """Instantiate one of the four fixed templates.

    ``rel_out``/``rel_in`` take the entity twice (pattern plus inequality
    filter); ``tail`` takes (entity, relation) and ``head`` (relation,
    entity). The relation argument is required exactly for the entity
    templates.
    """
    if template_kind not in SPARQL_TEMPLATES:
        raise ValueError(f"unknown template kind: {template_kind!r}")
    eid = entity_id(e)
    if template_kind in ("tail", "head"):
        if not r:
            raise ValueError(f"template {template_kind!r} requires a relation")
        slots = (eid, r) if template_kind == "tail" else (r, eid)
    else:
        if r is not None:
            raise ValueError(f"template {template_kind!r} takes no relation")
        slots = (eid, eid)
    return SPARQL_TEMPLATES[template_kind] % slots


def strip_ns(value: str) -> str:
    return value[len(NS_PREFIX):] if value.startswith(NS_PREFIX) else value


class SparqlGraph:
    """Graph backend over a remote SPARQL endpoint.

    Stateless per call: concurrent queries are fine. Unknown entities
    come back as empty result sets, matching the in-memory backend.
    """

    def __init__(
        self,
        endpoint: str,
        label_path: str | Path | None = None,
        labels: Mapping[str, str] | None = None,
        result_cap: int = 500,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.result_cap = result_cap
        self.timeout = timeout
        self._labels = dict(labels or {})
        if label_path:
            self._labels.update(load_labels(label_path))

    def _select(self, query: str, var: str) -> list[str]:
        try:
            resp = requests.get(
                self.endpoint,
                params={"query": query},
                headers={"Accept": "application/sparql-results+json"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise TransportError(f"SPARQL endpoint {self.endpoint}: {exc}") from exc
        bindings = payload.get("results", {}).get("bindings", [])
        values = [strip_ns(b[var]["value"]) for b in bindings if var in b]
        return values[: self.result_cap]

    def entity(self, e: EntityLike) -> Entity:
        eid = entity_id(e)
        return Entity(eid, self._labels.get(eid))

    def out_relations(self, e: EntityLike) -> set[str]:
        return set(self._select(render_sparql("rel_out", e), "relation"))

    def in_relations(self, e: EntityLike) -> set[str]:
        return set(self._select(render_sparql("rel_in", e), "relation"))

    def tail_entities(self, e: EntityLike, relation: str) -> set[Entity]:
        values = self._select(render_sparql("tail", e, relation), "tailEntity")
        return {self.entity(v) for v in values}

    def head_entities(self, e: EntityLike, relation: str) -> set[Entity]:
        values = self._select(render_sparql("head", e, relation), "tailEntity")
        return {self.entity(v) for v in values}
