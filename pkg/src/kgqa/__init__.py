"""Knowledge-graph question answering with ranked path retrieval, an LLM
sufficiency judgment, and conditional retriever-assisted exploration."""

__version__ = "0.1.0"

from .kg import Entity, GraphBackend, Triple, TripleGraph, load_labels, load_triples
from .llm import HttpChatBackend, LlmGateway, LlmRequest, LlmResponse, MockLlm
from .paths import PathStep, ReasoningPath, RelationHop, RelationPath, ScoredPath, linearize, path_text
from .pipeline import Pipeline, PipelineConfig, PipelineResult, TopicQuestion
from .relevance import LexicalScorer, RemoteScorer, ScoreRequest, label_paths, score_batch
from .retrieval import (
    RetrievalConfig,
    instantiate_reasoning_paths,
    rank_paths,
    retrieve_ranked_paths,
    retrieve_relation_paths,
)
from .sparql import SparqlGraph, render_sparql

__all__ = [
    "Entity",
    "GraphBackend",
    "HttpChatBackend",
    "LexicalScorer",
    "linearize",
    "LlmGateway",
    "LlmRequest",
    "LlmResponse",
    "load_labels",
    "load_triples",
    "MockLlm",
    "path_text",
    "PathStep",
    "Pipeline",
    "PipelineConfig",
    "PipelineResult",
    "rank_paths",
    "ReasoningPath",
    "RelationHop",
    "RelationPath",
    "RemoteScorer",
    "render_sparql",
    "retrieve_ranked_paths",
    "retrieve_relation_paths",
    "RetrievalConfig",
    "instantiate_reasoning_paths",
    "label_paths",
    "score_batch",
    "ScoredPath",
    "ScoreRequest",
    "SparqlGraph",
    "TopicQuestion",
    "Triple",
    "TripleGraph",
]
