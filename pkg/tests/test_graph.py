import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcnsim.graph import (
    Channel,
    ChannelGraph,
    Hop,
    NoPath,
    ParseError,
    Path,
    ValidationError,
    directional_success_prob,
    k_shortest_paths,
    load_graph,
    path_success_prob,
    save_graph,
    uncertain_hop_count,
)
from pcnsim.model import Degenerate, Uniform


def uchan(cid, a, b, capacity=100, balance=None):
    return Channel(cid, a, b, capacity, Uniform(capacity), balance)


def line_path(graph, node_ids):
    hops = []
    for u, v in zip(node_ids, node_ids[1:]):
        ch = next(
            c for c in graph.adjacent(u) if {c.node_a, c.node_b} == {u, v}
        )
        hops.append(Hop(ch, forward=(ch.node_a == u)))
    return Path(node_ids[0], tuple(hops))


@pytest.fixture
def triangle():
    return ChannelGraph(
        ["A", "B", "C"],
        [uchan("ab", "A", "B"), uchan("bc", "B", "C"), uchan("ac", "A", "C")],
    )


# ---------------------------------------------------------------------------
# Loading.
# ---------------------------------------------------------------------------


def write_graph(tmp_path, payload):
    p = tmp_path / "graph.json"
    p.write_text(json.dumps(payload))
    return p


def test_load_two_node_graph(tmp_path):
    p = write_graph(
        tmp_path,
        {
            "nodes": [{"id": "A"}, {"id": "B"}],
            "channels": [{"id": "0", "node_a": "A", "node_b": "B", "capacity": 100}],
        },
    )
    g = load_graph(p)
    assert g.n_nodes == 2 and g.n_channels == 1
    assert g.channel("0").prior == Uniform(100)
    assert g.channel("0").ground_truth_balance is None


def test_load_trusted_balance(tmp_path):
    p = write_graph(
        tmp_path,
        {
            "nodes": [{"id": "A"}, {"id": "B"}],
            "channels": [
                {"id": "0", "node_a": "A", "node_b": "B", "capacity": 100, "balance": 60}
            ],
        },
    )
    g = load_graph(p, trust_balances=True)
    assert g.channel("0").ground_truth_balance == 60
    assert g.channel("0").prior == Degenerate(100, 60)


def test_load_zero_capacity_rejected(tmp_path):
    p = write_graph(
        tmp_path,
        {
            "nodes": [{"id": "A"}, {"id": "B"}],
            "channels": [{"id": "0", "node_a": "A", "node_b": "B", "capacity": 0}],
        },
    )
    with pytest.raises(ValidationError):
        load_graph(p)


def test_load_malformed_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_graph(p)


def test_load_ignores_unknown_fields(tmp_path):
    p = write_graph(
        tmp_path,
        {
            "nodes": [{"id": "A", "alias": "x"}, {"id": "B"}],
            "channels": [
                {"id": "0", "node_a": "A", "node_b": "B", "capacity": 5, "fee": 1}
            ],
        },
    )
    assert load_graph(p).n_channels == 1


def test_save_load_roundtrip(tmp_path, triangle):
    out = tmp_path / "round.json"
    g = triangle.with_balances({"ab": 10, "bc": 20, "ac": 30})
    save_graph(g, out)
    back = load_graph(out)
    assert back.nodes == g.nodes
    assert {c.id: c.ground_truth_balance for c in back.channels.values()} == {
        "ab": 10,
        "bc": 20,
        "ac": 30,
    }


# ---------------------------------------------------------------------------
# Path enumeration.
# ---------------------------------------------------------------------------


def test_triangle_paths(triangle):
    paths = k_shortest_paths(triangle, "A", "C", 10, amount=1)
    assert [p.channel_ids for p in paths] == [("ac",), ("ab", "bc")]


def test_capacity_filter_drops_direct_path():
    g = ChannelGraph(
        ["A", "B", "C"],
        [uchan("ab", "A", "B", 100), uchan("bc", "B", "C", 100), uchan("ac", "A", "C", 10)],
    )
    paths = k_shortest_paths(g, "A", "C", 10, amount=50)
    assert [p.channel_ids for p in paths] == [("ab", "bc")]


def test_no_path_raised():
    g = ChannelGraph(["A", "B", "C"], [uchan("ab", "A", "B")])
    with pytest.raises(NoPath):
        k_shortest_paths(g, "A", "C", 5)


def brute_force_paths(graph, src, dst, amount):
    """Oracle: exhaustive DFS over simple paths, sorted by (length, id sequence)."""
    found = []

    def dfs(node, hops, ids, visited):
        if node == dst:
            found.append((len(hops), ids, hops))
            return
        for ch in graph.adjacent(node):
            if ch.capacity < amount:
                continue
            other = ch.other_end(node)
            if other in visited:
                continue
            dfs(
                other,
                hops + (Hop(ch, forward=(node == ch.node_a)),),
                ids + (ch.id,),
                visited | {other},
            )

    dfs(src, (), (), frozenset((src,)))
    found.sort(key=lambda t: (t[0], t[1]))
    return [Path(src, hops) for _, _, hops in found]


def test_k_shortest_matches_brute_force_on_random_graphs():
    rng = np.random.default_rng(777)
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        nodes = [f"n{i}" for i in range(n)]
        n_edges = int(rng.integers(1, 2 * n + 1))
        channels = []
        for e in range(n_edges):
            a, b = rng.choice(n, size=2, replace=False)
            capacity = int(rng.integers(1, 50))
            channels.append(uchan(f"c{e:02d}", nodes[a], nodes[b], capacity))
        g = ChannelGraph(nodes, channels)
        src, dst = (nodes[i] for i in rng.choice(n, size=2, replace=False))
        amount = int(rng.integers(0, 40))
        k = int(rng.integers(1, 1001))
        oracle = brute_force_paths(g, src, dst, amount)
        if not oracle:
            with pytest.raises(NoPath):
                k_shortest_paths(g, src, dst, k, amount)
            continue
        got = k_shortest_paths(g, src, dst, k, amount)
        assert got == oracle[:k]


def test_enumeration_is_deterministic(triangle):
    a = k_shortest_paths(triangle, "A", "C", 10)
    b = k_shortest_paths(triangle, "A", "C", 10)
    assert a == b


def test_parallel_channels_are_distinct_paths():
    g = ChannelGraph(
        ["A", "B"],
        [uchan("p1", "A", "B"), uchan("p2", "A", "B")],
    )
    paths = k_shortest_paths(g, "A", "B", 10)
    assert [p.channel_ids for p in paths] == [("p1",), ("p2",)]


def test_no_repeated_channel_in_results():
    rng = np.random.default_rng(5)
    nodes = [f"n{i}" for i in range(6)]
    channels = []
    for e in range(12):
        a, b = rng.choice(6, size=2, replace=False)
        channels.append(uchan(f"c{e}", nodes[int(a)], nodes[int(b)]))
    g = ChannelGraph(nodes, channels)
    try:
        for path in k_shortest_paths(g, "n0", "n5", 1000):
            assert len(set(path.channel_ids)) == len(path.channel_ids)
    except NoPath:
        pass


# ---------------------------------------------------------------------------
# Path success probability.
# ---------------------------------------------------------------------------


def test_two_uniform_hops():
    g = ChannelGraph(["A", "B", "C"], [uchan("ab", "A", "B"), uchan("bc", "B", "C")])
    p = line_path(g, ["A", "B", "C"])
    assert path_success_prob(g, p, 10) == pytest.approx((91 / 101) ** 2, abs=1e-12)


def test_four_uniform_hops_matches_closed_form():
    nodes = ["A", "B", "C", "D", "E"]
    channels = [uchan(f"c{i}", nodes[i], nodes[i + 1]) for i in range(4)]
    g = ChannelGraph(nodes, channels)
    p = line_path(g, nodes)
    assert path_success_prob(g, p, 10) == pytest.approx(0.659, abs=5e-4)


def test_zero_amount_probability_one(triangle):
    p = line_path(triangle, ["A", "B", "C"])
    assert path_success_prob(triangle, p, 0) == 1.0


def test_direction_swaps_balance_roles():
    ch = Channel("x", "A", "B", 100, Degenerate(100, 30), 30)
    g = ChannelGraph(["A", "B"], [ch])
    forward = Path("A", (Hop(ch, True),))
    reverse = Path("B", (Hop(ch, False),))
    # A holds 30, B holds 70.
    assert path_success_prob(g, forward, 30) == 1.0
    assert path_success_prob(g, forward, 31) == 0.0
    assert path_success_prob(g, reverse, 70) == 1.0
    assert path_success_prob(g, reverse, 71) == 0.0


def test_directional_prob_complement_identity():
    dist = Uniform(100)
    for a in [0, 1, 10, 50, 100, 101]:
        fwd = directional_success_prob(dist, True, a)
        rev = directional_success_prob(dist, False, a)
        # Uniform is symmetric around c/2.
        assert fwd == pytest.approx(rev, abs=1e-12)


@given(
    st.integers(min_value=1, max_value=6),
    st.integers(min_value=1, max_value=150),
    st.integers(min_value=1, max_value=150),
)
def test_path_monotone_and_bounded(n_hops, a1, a2):
    nodes = [f"n{i}" for i in range(n_hops + 1)]
    capacities = [50 + 13 * i for i in range(n_hops)]
    channels = [
        Channel(f"c{i}", nodes[i], nodes[i + 1], capacities[i], Uniform(capacities[i]))
        for i in range(n_hops)
    ]
    g = ChannelGraph(nodes, channels)
    p = line_path(g, nodes)
    lo_amt, hi_amt = min(a1, a2), max(a1, a2)
    s_lo = path_success_prob(g, p, lo_amt)
    s_hi = path_success_prob(g, p, hi_amt)
    assert s_hi <= s_lo + 1e-15
    factors = [
        directional_success_prob(h.channel.prior, h.forward, lo_amt) for h in p.hops
    ]
    assert s_lo <= max(factors) ** len(factors) + 1e-12


def test_uncertain_hop_count_cases():
    nodes = ["A", "B", "C", "D"]
    mid = Channel("bc", "B", "C", 100, Degenerate(100, 40), 40)
    channels = [uchan("ab", "A", "B"), mid, uchan("cd", "C", "D")]
    g = ChannelGraph(nodes, channels)
    direct = ChannelGraph(["A", "B"], [uchan("ab", "A", "B")])
    assert uncertain_hop_count(direct, line_path(direct, ["A", "B"])) == 0
    three = line_path(g, nodes)
    assert uncertain_hop_count(g, three) == 1  # middle hop is pinned
    g2 = ChannelGraph(nodes, [uchan("ab", "A", "B"), uchan("bc", "B", "C"), uchan("cd", "C", "D")])
    assert uncertain_hop_count(g2, line_path(g2, nodes)) == 2


def test_path_validation():
    ab = uchan("ab", "A", "B")
    cd = uchan("cd", "C", "D")
    with pytest.raises(ValidationError):
        Path("A", (Hop(ab, True), Hop(cd, True)))
    with pytest.raises(ValidationError):
        Path("B", (Hop(ab, True),))
