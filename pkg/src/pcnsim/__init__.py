"""Reliability and privacy analytics plus a Monte-Carlo payment simulator
for channel networks with uncertain balances."""

from . import analytics, config, graph, infogain, model, simulator, synthetic

__version__ = "0.1.0"

__all__ = [
    "analytics",
    "config",
    "graph",
    "infogain",
    "model",
    "simulator",
    "synthetic",
]
