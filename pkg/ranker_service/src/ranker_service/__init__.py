"""Relevance scoring service: margin-ranking training for relation/path
heads over a shared encoder, plus the remote-scorer HTTP endpoint."""

__version__ = "0.1.0"

from .model import HashBowEncoder, ScoringModel, compose_input, load_model, save_model
from .server import ScoringServer, serve, start_server
from .training import TrainConfig, TrainResult, load_pairs, margin_loss, train

__all__ = [
    "compose_input",
    "HashBowEncoder",
    "load_model",
    "load_pairs",
    "margin_loss",
    "save_model",
    "ScoringModel",
    "ScoringServer",
    "serve",
    "start_server",
    "train",
    "TrainConfig",
    "TrainResult",
]
