"""Synthetic channel graphs for experiments.

The bundled "active kernel" stand-in mimics a hub-heavy payment network at
desk scale: preferential-attachment topology, log-normal capacities.  All
generation is deterministic per seed.  Provenance is synthetic; real probed
snapshots can be supplied as graph JSON instead.
"""

from __future__ import annotations

import numpy as np

from .graph import Channel, ChannelGraph
from .model import Degenerate, Uniform

__all__ = ["synthetic_kernel", "validation_chain", "with_constant_capacity"]

CAPACITY_FLOOR = 50_000
CAPACITY_CEILING = 50_000_000


def synthetic_kernel(
    seed: int,
    n_nodes: int = 137,
    n_channels: int = 882,
    capacity_median: int = 4_000_000,
    capacity_sigma: float = 1.2,
    prior_factory=Uniform,
) -> ChannelGraph:
    """Hub-heavy topology: a small seed clique plus preferential attachment,
    topped up with degree-weighted extra edges to hit n_channels exactly."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6B65726E]))
    m0 = min(7, n_nodes - 1)
    if m0 < 2:
        raise ValueError("need at least 3 nodes")
    clique_edges = m0 * (m0 - 1) // 2
    if n_channels < clique_edges + (n_nodes - m0):
        raise ValueError(f"too few channels to connect {n_nodes} nodes")
    attach = min(m0, max(1, (n_channels - clique_edges) // max(1, n_nodes - m0)))

    nodes = [f"n{i:03d}" for i in range(n_nodes)]
    degree = np.zeros(n_nodes, dtype=np.int64)
    edges = []

    def add_edge(u, v):
        edges.append((u, v))
        degree[u] += 1
        degree[v] += 1

    for u in range(m0):
        for v in range(u + 1, m0):
            add_edge(u, v)

    for new in range(m0, n_nodes):
        weights = degree[:new].astype(np.float64)
        weights /= weights.sum()
        targets = rng.choice(new, size=attach, replace=False, p=weights)
        for t in targets:
            add_edge(new, int(t))

    existing = set(map(frozenset, edges))
    while len(edges) < n_channels:
        weights = degree.astype(np.float64)
        weights /= weights.sum()
        u, v = rng.choice(n_nodes, size=2, replace=False, p=weights)
        key = frozenset((int(u), int(v)))
        if key in existing:
            continue
        existing.add(key)
        add_edge(int(u), int(v))

    log_caps = rng.normal(np.log(capacity_median), capacity_sigma, size=len(edges))
    capacities = np.clip(
        np.exp(log_caps).round().astype(np.int64), CAPACITY_FLOOR, CAPACITY_CEILING
    )

    channels = [
        Channel(
            f"ch{i:04d}", nodes[u], nodes[v], int(capacities[i]),
            prior_factory(int(capacities[i])),
        )
        for i, (u, v) in enumerate(edges)
    ]
    return ChannelGraph(nodes, channels)


def with_constant_capacity(
    graph: ChannelGraph, capacity: int, prior_factory=Uniform
) -> ChannelGraph:
    """Same topology, every channel set to one capacity (drops balances)."""
    channels = [
        Channel(ch.id, ch.node_a, ch.node_b, capacity, prior_factory(capacity))
        for ch in graph.channels.values()
    ]
    return ChannelGraph(graph.nodes, channels)


def validation_chain(uncertain_hops: int, capacity: int) -> ChannelGraph:
    """A single line of channels for model-validation runs: the sender's own
    first hop is pinned at full balance (it never fails and never counts as
    uncertain), followed by `uncertain_hops` uniform channels."""
    if uncertain_hops < 0:
        raise ValueError("uncertain_hops must be >= 0")
    nodes = [f"v{i}" for i in range(uncertain_hops + 2)]
    channels = [
        Channel(
            "h00", nodes[0], nodes[1], capacity,
            Degenerate(capacity, capacity), capacity,
        )
    ]
    channels.extend(
        Channel(f"h{i + 1:02d}", nodes[i + 1], nodes[i + 2], capacity, Uniform(capacity))
        for i in range(uncertain_hops)
    )
    return ChannelGraph(nodes, channels)
