"""Channel-graph data model, JSON ingestion, and candidate-path enumeration.

A channel connects two nodes and stores the full capacity plus, optionally,
the ground-truth balance held by ``node_a``.  Paths are ordered sequences of
directed channel traversals; enumeration is deterministic (hop count first,
then the lexicographic sequence of channel ids).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .model import BalanceDistribution, Degenerate, Uniform

__all__ = [
    "ParseError",
    "ValidationError",
    "NoPath",
    "NodeId",
    "Channel",
    "Hop",
    "Path",
    "ChannelGraph",
    "directional_success_prob",
    "load_graph",
    "save_graph",
    "k_shortest_paths",
    "path_success_prob",
    "uncertain_hop_count",
]

NodeId = str


class ParseError(ValueError):
    """The graph file is structurally malformed."""


class ValidationError(ValueError):
    """A graph invariant is violated (message names the offending channel)."""


class NoPath(Exception):
    """Source and destination are disconnected at the requested amount."""


@dataclass(frozen=True)
class Channel:
    id: str
    node_a: NodeId
    node_b: NodeId
    capacity: int
    prior: BalanceDistribution
    ground_truth_balance: Optional[int] = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("channel id must be non-empty")
        if self.node_a == self.node_b:
            raise ValidationError(f"channel {self.id}: node_a == node_b")
        if self.capacity < 1:
            raise ValidationError(f"channel {self.id}: capacity must be >= 1")
        if self.prior.capacity != self.capacity:
            raise ValidationError(
                f"channel {self.id}: prior capacity {self.prior.capacity} "
                f"!= channel capacity {self.capacity}"
            )
        b = self.ground_truth_balance
        if b is not None and not (0 <= b <= self.capacity):
            raise ValidationError(
                f"channel {self.id}: balance {b} outside [0, {self.capacity}]"
            )

    def other_end(self, node: NodeId) -> NodeId:
        return self.node_b if node == self.node_a else self.node_a

    def sendable(self, forward: bool) -> int:
        """Ground-truth balance available to the sending side."""
        if self.ground_truth_balance is None:
            raise ValueError(f"channel {self.id} has no ground-truth balance")
        return self.ground_truth_balance if forward else self.capacity - self.ground_truth_balance


@dataclass(frozen=True)
class Hop:
    """One directed traversal: forward means node_a is the sender."""

    channel: Channel
    forward: bool

    @property
    def sender(self) -> NodeId:
        return self.channel.node_a if self.forward else self.channel.node_b

    @property
    def receiver(self) -> NodeId:
        return self.channel.node_b if self.forward else self.channel.node_a


@dataclass(frozen=True)
class Path:
    source: NodeId
    hops: tuple

    def __post_init__(self):
        if not self.hops:
            raise ValidationError("path needs at least one hop")
        if self.hops[0].sender != self.source:
            raise ValidationError("first hop must start at the path source")
        at = self.source
        seen = set()
        for hop in self.hops:
            if hop.sender != at:
                raise ValidationError("hops are not contiguous")
            if hop.channel.id in seen:
                raise ValidationError(f"channel {hop.channel.id} repeated in path")
            seen.add(hop.channel.id)
            at = hop.receiver

    @property
    def target(self) -> NodeId:
        return self.hops[-1].receiver

    @property
    def channel_ids(self) -> tuple:
        return tuple(hop.channel.id for hop in self.hops)

    def __len__(self):
        return len(self.hops)


class ChannelGraph:
    """Immutable after construction; safe for shared concurrent reads."""

    def __init__(self, nodes: Iterable[NodeId], channels: Iterable[Channel]):
        self.nodes = frozenset(nodes)
        ordered = sorted(channels, key=lambda ch: ch.id)
        self.channels: dict[str, Channel] = {}
        adjacency: dict[NodeId, list[Channel]] = {n: [] for n in self.nodes}
        for ch in ordered:
            if ch.id in self.channels:
                raise ValidationError(f"duplicate channel id {ch.id}")
            for end in (ch.node_a, ch.node_b):
                if end not in self.nodes:
                    raise ValidationError(f"channel {ch.id}: unknown node {end}")
            self.channels[ch.id] = ch
            adjacency[ch.node_a].append(ch)
            adjacency[ch.node_b].append(ch)
        self._adjacency = {n: tuple(chs) for n, chs in adjacency.items()}

    def channel(self, channel_id: str) -> Channel:
        return self.channels[channel_id]

    def adjacent(self, node: NodeId) -> tuple:
        return self._adjacency[node]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def replace_channels(self, replacements: Mapping[str, Channel]) -> "ChannelGraph":
        merged = [replacements.get(cid, ch) for cid, ch in self.channels.items()]
        return ChannelGraph(self.nodes, merged)

    def with_priors(self, prior_for: Callable[[Channel], BalanceDistribution]) -> "ChannelGraph":
        return self.replace_channels(
            {
                ch.id: Channel(
                    ch.id, ch.node_a, ch.node_b, ch.capacity,
                    prior_for(ch), ch.ground_truth_balance,
                )
                for ch in self.channels.values()
            }
        )

    def with_balances(self, balances: Mapping[str, int]) -> "ChannelGraph":
        return self.replace_channels(
            {
                cid: Channel(
                    ch.id, ch.node_a, ch.node_b, ch.capacity, ch.prior, balance,
                )
                for cid, balance in balances.items()
                for ch in [self.channels[cid]]
            }
        )

    def to_json_dict(self) -> dict:
        channels = []
        for ch in self.channels.values():
            entry = {
                "id": ch.id,
                "node_a": ch.node_a,
                "node_b": ch.node_b,
                "capacity": ch.capacity,
            }
            if ch.ground_truth_balance is not None:
                entry["balance"] = ch.ground_truth_balance
            channels.append(entry)
        return {"nodes": [{"id": n} for n in sorted(self.nodes)], "channels": channels}


# ---------------------------------------------------------------------------
# File ingestion.
# ---------------------------------------------------------------------------


def load_graph(
    path,
    default_prior: Callable[[int], BalanceDistribution] = Uniform,
    trust_balances: bool = False,
) -> ChannelGraph:
    """Read a graph JSON file.

    Channels without a "balance" field get default_prior(capacity); with
    trust_balances, channels carrying a balance get a Degenerate prior at it.
    Unknown fields are ignored.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read graph file {path}: {exc}") from exc

    if not isinstance(raw, dict) or "nodes" not in raw or "channels" not in raw:
        raise ParseError(f"{path}: expected an object with 'nodes' and 'channels'")

    try:
        nodes = [str(entry["id"]) for entry in raw["nodes"]]
    except (TypeError, KeyError) as exc:
        raise ParseError(f"{path}: malformed node entry: {exc}") from exc
    if any(not n for n in nodes):
        raise ParseError(f"{path}: empty node id")

    channels = []
    for entry in raw["channels"]:
        try:
            cid = str(entry["id"])
            node_a = str(entry["node_a"])
            node_b = str(entry["node_b"])
            capacity = int(entry["capacity"])
        except (TypeError, KeyError, ValueError) as exc:
            raise ParseError(f"{path}: malformed channel entry: {exc}") from exc
        balance = entry.get("balance")
        if balance is not None:
            balance = int(balance)
        if trust_balances and balance is not None:
            if capacity < 1 or not (0 <= balance <= capacity):
                raise ValidationError(
                    f"channel {cid}: balance {balance} incompatible with capacity {capacity}"
                )
            prior: BalanceDistribution = Degenerate(capacity, balance)
        else:
            if capacity < 1:
                raise ValidationError(f"channel {cid}: capacity must be >= 1")
            prior = default_prior(capacity)
        channels.append(Channel(cid, node_a, node_b, capacity, prior, balance))

    return ChannelGraph(nodes, channels)


def save_graph(graph: ChannelGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Path enumeration and path-level probabilities.
# ---------------------------------------------------------------------------


def k_shortest_paths(
    graph: ChannelGraph,
    src: NodeId,
    dst: NodeId,
    k: int,
    amount: int = 0,
    max_hops: Optional[int] = None,
) -> list:
    """Up to k loop-free paths ordered by (hop count, channel-id sequence).

    Only channels with capacity >= amount are considered.  Iterative
    deepening over the hop count: for each length, a depth-first sweep in
    channel-id order (pruned by the remaining hop distance to the target)
    emits exactly the simple paths of that length in lexicographic order, so
    the overall emission order equals the global sorted order.
    """
    if src == dst:
        raise ValueError("source and destination must differ")
    if k < 1:
        raise ValueError("k must be >= 1")
    for node in (src, dst):
        if node not in graph.nodes:
            raise ValidationError(f"unknown node {node}")

    # Hop distances to dst over admissible channels, for pruning.
    dist = {dst: 0}
    queue = [dst]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        for ch in graph.adjacent(node):
            if ch.capacity < amount:
                continue
            other = ch.other_end(node)
            if other not in dist:
                dist[other] = dist[node] + 1
                queue.append(other)
    if src not in dist:
        raise NoPath(f"no path from {src} to {dst} at amount {amount}")

    longest = graph.n_nodes - 1
    if max_hops is not None:
        longest = min(longest, max_hops)

    results = []
    hops: list = []
    visited = {src}

    def sweep(node, depth, target_len):
        if node == dst:
            if depth == target_len:
                results.append(Path(src, tuple(hops)))
            return len(results) >= k
        if depth == target_len:
            return False
        for ch in graph.adjacent(node):
            if ch.capacity < amount:
                continue
            other = ch.other_end(node)
            if other in visited:
                continue
            remaining = dist.get(other)
            if remaining is None or depth + 1 + remaining > target_len:
                continue
            visited.add(other)
            hops.append(Hop(ch, forward=(node == ch.node_a)))
            done = sweep(other, depth + 1, target_len)
            hops.pop()
            visited.remove(other)
            if done:
                return True
        return False

    for target_len in range(dist[src], longest + 1):
        if sweep(src, 0, target_len):
            break
    if not results:
        raise NoPath(f"no path from {src} to {dst} at amount {amount}")
    return results


def directional_success_prob(dist: BalanceDistribution, forward: bool, amount: int) -> float:
    """P(the sending side of this traversal holds at least `amount`)."""
    if forward:
        return dist.success_prob(amount)
    # Reverse direction sends from capacity - X.
    return dist.failure_prob(dist.capacity - amount + 1)


def path_success_prob(graph: ChannelGraph, path: Path, amount: int, beliefs=None) -> float:
    """Product of per-hop directional success probabilities.

    With beliefs, each hop is evaluated under the current posterior; the
    sender's own channels carry Degenerate beliefs there, so first hops
    contribute exactly 0 or 1.  Without beliefs, channel priors are used.
    """
    prob = 1.0
    for hop in path.hops:
        if beliefs is None:
            p = directional_success_prob(hop.channel.prior, hop.forward, amount)
        else:
            p = beliefs.directional_success_prob(hop.channel, hop.forward, amount)
        if p <= 0.0:
            return 0.0
        prob *= p
    return prob


def uncertain_hop_count(graph: ChannelGraph, path: Path, beliefs=None) -> int:
    """Hops whose sending-side balance is unknown to the path source.

    The source's own channels are excluded, as are hops whose belief (or
    prior) pins the balance to a single value.
    """
    count = 0
    for hop in path.hops:
        if hop.sender == path.source or hop.receiver == path.source:
            continue
        dist = (
            beliefs.posterior(hop.channel.id)
            if beliefs is not None
            else hop.channel.prior
        )
        lo, hi = dist.support()
        if lo != hi:
            count += 1
    return count
