"""Monte-Carlo payment sessions over a channel graph.

A session delivers one (possibly multi-part) payment: parts are attempted
sequentially, each attempt picks a candidate path under the configured
strategy, tests it hop by hop against ground truth (static mode) or freshly
sampled balances (dynamic mode), and records the outcome, the dispatch-time
success probability, and the information gained.

Static mode remembers evidence: failed channels are never re-tried at
amounts they could not forward, and delivered parts deduct liquidity from
their channels for the rest of the session.  Dynamic mode redraws balances
per attempt, making attempts independent, so beliefs reset to the priors
and nothing is excluded.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .analytics import equal_split
from .graph import ChannelGraph, NoPath, Path, k_shortest_paths
from .infogain import BeliefState

__all__ = [
    "SimulationMode",
    "Baseline",
    "MaximumLikelihood",
    "PaymentTask",
    "AttemptRecord",
    "SessionResult",
    "ExperimentRow",
    "NoCandidatePaths",
    "Exhausted",
    "run_payment",
    "next_path_baseline",
    "next_path_max_likelihood",
    "rebalance_graph",
    "run_experiment",
    "ensure_static_balances",
    "session_seed",
]


class SimulationMode(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class Baseline:
    """Random choice among the shortest still-viable candidate paths."""

    candidate_count: int = 1000


@dataclass(frozen=True)
class MaximumLikelihood:
    """Always the candidate with the highest believed success probability."""

    candidate_count: int = 1000


@dataclass(frozen=True)
class PaymentTask:
    sender: str
    receiver: str
    amount: int
    parts: int = 1

    def __post_init__(self):
        if self.sender == self.receiver:
            raise ValueError("sender and receiver must differ")
        if self.parts < 1 or self.amount < self.parts:
            raise ValueError(
                f"need amount >= parts >= 1, got amount={self.amount} parts={self.parts}"
            )


@dataclass
class AttemptRecord:
    part_index: int
    path: Path
    theoretic_success_prob: float
    success: bool
    failing_hop: Optional[int]
    info_gain_delta: float


@dataclass
class SessionResult:
    task: PaymentTask
    delivered: bool
    attempts: list
    session_info_gain: float
    failure_reason: Optional[str] = None

    @property
    def total_attempts(self) -> int:
        return len(self.attempts)

    @property
    def first_path_success_prob(self) -> float:
        return self.attempts[0].theoretic_success_prob if self.attempts else 0.0


class NoCandidatePaths(Exception):
    """No viable path exists before any attempt is made."""


class Exhausted(Exception):
    """Every remaining candidate is excluded."""


# ---------------------------------------------------------------------------
# Path selection.
# ---------------------------------------------------------------------------


def next_path_baseline(candidates, excluded, rng, eligible=None) -> Path:
    """Uniform random pick among the shortest candidates that avoid the
    excluded channels (and pass the extra eligibility predicate, if any).

    Candidates must be ordered by (hop count, channel-id sequence), as
    produced by k_shortest_paths.
    """
    pool = []
    pool_len = None
    for path in candidates:
        if pool_len is not None and len(path.hops) > pool_len:
            break
        if any(hop.channel.id in excluded for hop in path.hops):
            continue
        if eligible is not None and not eligible(path):
            continue
        if pool_len is None:
            pool_len = len(path.hops)
        pool.append(path)
    if not pool:
        raise Exhausted("all candidate paths are excluded")
    return pool[int(rng.integers(0, len(pool)))]


def next_path_max_likelihood(candidates, beliefs, amount, excluded, prob_fn=None) -> Path:
    """The candidate maximizing the believed path success probability; ties
    break toward fewer hops, then the lexicographic channel-id sequence.
    Zero-probability paths are skipped."""
    if prob_fn is None:

        def prob_fn(path):
            prob = 1.0
            for hop in path.hops:
                p = beliefs.directional_success_prob(hop.channel, hop.forward, amount)
                if p <= 0.0:
                    return 0.0
                prob *= p
            return prob

    best_key, best_path = None, None
    for path in candidates:
        if any(hop.channel.id in excluded for hop in path.hops):
            continue
        p = prob_fn(path)
        if p <= 0.0:
            continue
        key = (-p, len(path.hops), path.channel_ids)
        if best_key is None or key < best_key:
            best_key, best_path = key, path
    if best_path is None:
        raise Exhausted("no candidate path has positive success probability")
    return best_path


# ---------------------------------------------------------------------------
# One payment session.
# ---------------------------------------------------------------------------


def run_payment(
    graph: ChannelGraph,
    task: PaymentTask,
    mode: SimulationMode,
    strategy,
    rng,
    max_attempts: int = 200,
    candidates=None,
) -> SessionResult:
    """Deliver one payment, attempting until all parts land, the candidate
    set is exhausted, or max_attempts is reached.

    Raises NoCandidatePaths only when not a single attempt could be made;
    later exhaustion returns an undeliverable SessionResult.  The graph is
    never mutated: in-session liquidity deductions live in a local ledger
    and implicitly roll back when the session ends.
    """
    if max_attempts < task.parts:
        raise ValueError("max_attempts below the number of parts")
    part_amounts = equal_split(task.amount, task.parts)
    if candidates is None:
        try:
            candidates = k_shortest_paths(
                graph, task.sender, task.receiver, strategy.candidate_count
            )
        except NoPath as exc:
            raise NoCandidatePaths(str(exc)) from exc

    if mode is SimulationMode.DYNAMIC:
        # Balances are independent per attempt: beliefs stay at the priors,
        # nothing is excluded, and per-part selection pools are constant, so
        # the session reduces to a tight sampling loop.
        return _run_dynamic(task, strategy, rng, max_attempts, candidates, part_amounts)

    own = {}
    for ch in graph.adjacent(task.sender):
        if ch.ground_truth_balance is None:
            raise ValueError(
                f"static mode requires ground-truth balances (channel {ch.id})"
            )
        own[ch.id] = ch.ground_truth_balance
    beliefs = BeliefState.from_graph(graph, known_balances=own)

    flows: dict = {}  # channel id -> net node_a-side deduction this session
    attempts: list = []

    def effective(hop, amount):
        d = flows.get(hop.channel.id, 0)
        return amount + d if hop.forward else amount - d

    def path_prob(path, amount):
        prob = 1.0
        for hop in path.hops:
            p = beliefs.directional_success_prob(
                hop.channel, hop.forward, effective(hop, amount)
            )
            if p <= 0.0:
                return 0.0
            prob *= p
        return prob

    def undeliverable(reason):
        return SessionResult(
            task, False, attempts, beliefs.session_information_gain(),
            failure_reason=reason,
        )

    for part_index, part_amount in enumerate(part_amounts):
        while True:
            if len(attempts) >= max_attempts:
                return undeliverable("max_attempts reached")
            prob_fn = lambda path: path_prob(path, part_amount)
            try:
                if isinstance(strategy, MaximumLikelihood):
                    path = next_path_max_likelihood(
                        candidates, beliefs, part_amount, frozenset(), prob_fn=prob_fn
                    )
                else:
                    path = next_path_baseline(
                        candidates,
                        frozenset(),
                        rng,
                        eligible=lambda p: prob_fn(p) > 0.0,
                    )
            except Exhausted:
                if not attempts:
                    raise NoCandidatePaths(
                        f"no viable path for {part_amount} from {task.sender} "
                        f"to {task.receiver}"
                    ) from None
                return undeliverable("candidates exhausted")
            prob = path_prob(path, part_amount)

            failing = _test_static(path, part_amount, flows)
            offsets = [flows.get(h.channel.id, 0) for h in path.hops]
            delta = beliefs.observe_attempt(
                path, part_amount, failing, flow_offsets=offsets
            )

            attempts.append(
                AttemptRecord(part_index, path, prob, failing is None, failing, delta)
            )
            if failing is None:
                for hop in path.hops:
                    d = part_amount if hop.forward else -part_amount
                    flows[hop.channel.id] = flows.get(hop.channel.id, 0) + d
                break

    return SessionResult(task, True, attempts, beliefs.session_information_gain())


def _test_static(path, amount, flows):
    """Index of the first hop whose deducted ground-truth balance is short."""
    for index, hop in enumerate(path.hops):
        d = flows.get(hop.channel.id, 0)
        sendable = hop.channel.sendable(hop.forward)
        sendable = sendable - d if hop.forward else sendable + d
        if sendable < amount:
            return index
    return None


class _DynamicPartPlan:
    """Per-part constants for dynamic mode: the eligible pool with dispatch
    probabilities, per-hop sampling ranges, failure thresholds, and the
    attempt-gain table indexed by failing hop."""

    __slots__ = ("pool", "probs", "samplers", "gain_if_fail", "gain_if_success")

    def __init__(self, candidates, amount):
        self.pool = []
        self.probs = []
        self.samplers = []
        self.gain_if_fail = []
        self.gain_if_success = []
        shortest = None
        for path in candidates:
            if shortest is not None and len(path.hops) > shortest:
                break
            prob = 1.0
            for hop in path.hops:
                p = _prior_directional_prob(hop, amount)
                if p <= 0.0:
                    prob = 0.0
                    break
                prob *= p
            if prob <= 0.0:
                continue
            if shortest is None:
                shortest = len(path.hops)
            self.pool.append(path)
            self.probs.append(prob)
            self.samplers.append(_hop_sampler(path, amount))
            fail_gains, success_total = _prior_gain_table(path, amount)
            self.gain_if_fail.append(fail_gains)
            self.gain_if_success.append(success_total)


def _prior_directional_prob(hop, amount):
    prior = hop.channel.prior
    if hop.forward:
        return prior.success_prob(amount)
    return prior.failure_prob(prior.capacity - amount + 1)


def _hop_sampler(path, amount):
    """(lows, highs, fail_below, fail_above) arrays for vectorized hop tests;
    None when a prior is not a single uniform block (loop fallback)."""
    lows, highs, below, above = [], [], [], []
    for hop in path.hops:
        pieces = hop.channel.prior.pieces()
        if pieces is None:
            return None
        segments, points = pieces
        if len(segments) == 1 and not points:
            lo, hi, _ = segments[0]
        elif not segments and len(points) == 1:
            lo = hi = points[0][0]
        else:
            return None
        lows.append(lo)
        highs.append(hi + 1)
        if hop.forward:
            below.append(amount)  # fail when balance < amount
            above.append(np.iinfo(np.int64).max)
        else:
            below.append(np.iinfo(np.int64).min)
            above.append(hop.channel.capacity - amount)  # fail when balance > this
    return (
        np.array(lows, dtype=np.int64),
        np.array(highs, dtype=np.int64),
        below,
        above,
    )


def _prior_gain_table(path, amount):
    """gain_if_fail[i]: info gain when hop i is the first failure;
    gain_if_success: gain when every hop forwards the amount."""
    success_gains = []
    fail_gains = []
    for hop in path.hops:
        prior = hop.channel.prior
        capacity = hop.channel.capacity
        if hop.forward:
            mass_success = prior.interval_mass(amount, capacity)
        else:
            mass_success = prior.interval_mass(0, capacity - amount)
        success_gains.append(-math.log(mass_success) if mass_success < 1.0 else 0.0)
        mass_fail = 1.0 - mass_success
        fail_gains.append(-math.log(mass_fail) if mass_fail > 0.0 else 0.0)
    table = []
    prefix = 0.0
    for i in range(len(path.hops)):
        table.append(prefix + fail_gains[i])
        prefix += success_gains[i]
    return table, prefix


def _run_dynamic(task, strategy, rng, max_attempts, candidates, part_amounts):
    ml = isinstance(strategy, MaximumLikelihood)
    attempts: list = []
    total_gain = 0.0

    plans = {}
    for part_index, part_amount in enumerate(part_amounts):
        if part_amount not in plans:
            if ml:
                plans[part_amount] = _best_dynamic_choice(candidates, part_amount)
            else:
                plans[part_amount] = _DynamicPartPlan(candidates, part_amount)
        plan = plans[part_amount]
        pool = plan.pool
        if not pool:
            if not attempts:
                raise NoCandidatePaths(
                    f"no viable path for {part_amount} from {task.sender} "
                    f"to {task.receiver}"
                )
            return SessionResult(
                task, False, attempts, total_gain, failure_reason="candidates exhausted"
            )
        while True:
            if len(attempts) >= max_attempts:
                return SessionResult(
                    task, False, attempts, total_gain,
                    failure_reason="max_attempts reached",
                )
            index = 0 if len(pool) == 1 else int(rng.integers(0, len(pool)))
            path = pool[index]
            sampler = plan.samplers[index]
            if sampler is None:
                failing = _sample_hops_generic(path, part_amount, rng)
            else:
                lows, highs, below, above = sampler
                balances = rng.integers(lows, highs)
                failing = None
                for j in range(len(balances)):
                    b = balances[j]
                    if b < below[j] or b > above[j]:
                        failing = j
                        break
            if failing is None:
                delta = plan.gain_if_success[index]
            else:
                delta = plan.gain_if_fail[index][failing]
            total_gain += delta
            attempts.append(
                AttemptRecord(
                    part_index, path, plan.probs[index], failing is None, failing, delta
                )
            )
            if failing is None:
                break
    return SessionResult(task, True, attempts, total_gain)


def _best_dynamic_choice(candidates, amount):
    """Maximum-likelihood choice is constant in dynamic mode (beliefs never
    move), so the plan holds a single path."""
    best_key, best = None, None
    for path in candidates:
        prob = 1.0
        for hop in path.hops:
            p = _prior_directional_prob(hop, amount)
            if p <= 0.0:
                prob = 0.0
                break
            prob *= p
        if prob <= 0.0:
            continue
        key = (-prob, len(path.hops), path.channel_ids)
        if best_key is None or key < best_key:
            best_key, best = key, (path, prob)
    plan = _DynamicPartPlan([], amount)
    if best is not None:
        path, prob = best
        plan.pool = [path]
        plan.probs = [prob]
        plan.samplers = [_hop_sampler(path, amount)]
        fail_gains, success_total = _prior_gain_table(path, amount)
        plan.gain_if_fail = [fail_gains]
        plan.gain_if_success = [success_total]
    return plan


def _sample_hops_generic(path, amount, rng):
    for index, hop in enumerate(path.hops):
        balance = hop.channel.prior.sample(rng)
        sendable = balance if hop.forward else hop.channel.capacity - balance
        if sendable < amount:
            return index
    return None


# ---------------------------------------------------------------------------
# Rebalancing.
# ---------------------------------------------------------------------------


def rebalance_graph(
    graph: ChannelGraph,
    tolerance: float = 1e-6,
    max_iterations: int = 20_000,
    max_cycle_len: int = 5,
) -> ChannelGraph:
    """Move funds along short cycles to push balance ratios toward 1/2.

    Greedy sweeps: channels are visited worst-imbalance-first; each visited
    channel gets a circular payment through a short return path (cycle
    length <= max_cycle_len) with the integer flow minimizing the cycle's
    sum of squared ratio deviations.  Sweeps repeat until one applies no
    move improving by more than `tolerance`, or max_iterations moves have
    been applied.  Capacities and every node's total own balance are
    conserved exactly.
    """
    balances = {}
    for cid, ch in graph.channels.items():
        if ch.ground_truth_balance is None:
            raise ValueError(f"channel {cid} lacks a ground-truth balance")
        balances[cid] = ch.ground_truth_balance
    channels = graph.channels

    def deviation(cid):
        return balances[cid] / channels[cid].capacity - 0.5

    moves = 0
    while moves < max_iterations:
        order = sorted(channels, key=lambda cid: (-abs(deviation(cid)), cid))
        applied = 0
        for cid in order:
            # A channel whose own squared deviation is below the tolerance
            # cannot anchor an improving move; the order makes this a tail.
            if deviation(cid) ** 2 <= tolerance:
                break
            move = _best_local_cycle(graph, balances, cid, tolerance, max_cycle_len)
            if move is None:
                continue
            cycle, delta = move
            for ccid, forward in cycle:
                balances[ccid] += -delta if forward else delta
            applied += 1
            moves += 1
            if moves >= max_iterations:
                break
        if applied == 0:
            break

    if all(balances[cid] == channels[cid].ground_truth_balance for cid in balances):
        return graph
    return graph.with_balances(balances)


def _best_local_cycle(graph, balances, cid, tolerance, max_cycle_len):
    """Best improving cycle anchored at `cid`: all 1- and 2-hop return paths
    are line-searched and the largest improvement wins; longer returns fall
    back to a BFS path.  Returns (cycle, flow) or None."""
    ch = graph.channel(cid)
    forward = balances[cid] / ch.capacity > 0.5
    start = ch.node_b if forward else ch.node_a  # flow arrives here
    goal = ch.node_a if forward else ch.node_b
    anchor = (cid, forward)

    def sendable(channel, sender):
        b = balances[channel.id]
        return b if channel.node_a == sender else channel.capacity - b

    best = None
    for first in graph.adjacent(start):
        if first.id == cid or sendable(first, start) <= 0:
            continue
        mid = first.other_end(start)
        first_hop = (first.id, first.node_a == start)
        if mid == goal:
            candidate = [anchor, first_hop]
            delta, improvement = _best_cycle_flow(graph, balances, candidate)
            if delta > 0 and improvement > tolerance:
                if best is None or improvement > best[0]:
                    best = (improvement, candidate, delta)
            continue
        for second in graph.adjacent(mid):
            if second.id in (cid, first.id) or second.other_end(mid) != goal:
                continue
            if sendable(second, mid) <= 0:
                continue
            candidate = [anchor, first_hop, (second.id, second.node_a == mid)]
            delta, improvement = _best_cycle_flow(graph, balances, candidate)
            if delta > 0 and improvement > tolerance:
                if best is None or improvement > best[0]:
                    best = (improvement, candidate, delta)
    if best is not None:
        return best[1], best[2]

    if max_cycle_len > 3:
        cycle = _cycle_through(graph, balances, cid, max_cycle_len)
        if cycle is not None:
            delta, improvement = _best_cycle_flow(graph, balances, cycle)
            if delta > 0 and improvement > tolerance:
                return cycle, delta
    return None


def _cycle_through(graph, balances, cid, max_cycle_len):
    """A cycle that sends flow out of `cid`'s surplus side: BFS for the
    shortest return path, preferring hops whose sender also drains surplus."""
    ch = graph.channel(cid)
    forward = balances[cid] / ch.capacity > 0.5  # node_a holds the surplus
    start = ch.node_b if forward else ch.node_a  # flow arrives here
    goal = ch.node_a if forward else ch.node_b

    def sendable(channel, fwd):
        b = balances[channel.id]
        return b if fwd else channel.capacity - b

    # Two passes: first restrict to hops whose sender side is above 1/2
    # (the flow then helps them too), then accept any hop with liquidity.
    for surplus_only in (True, False):
        parents = {start: None}
        queue = [(start, 0)]
        head = 0
        while head < len(queue):
            node, depth = queue[head]
            head += 1
            if depth > max_cycle_len - 2:
                continue
            for nxt in graph.adjacent(node):
                if nxt.id == cid:
                    continue
                fwd = nxt.node_a == node
                liquidity = sendable(nxt, fwd)
                if liquidity <= 0:
                    continue
                if surplus_only and liquidity <= nxt.capacity / 2:
                    continue
                other = nxt.other_end(node)
                if other == goal:
                    hops = [(nxt.id, fwd)]
                    at = node
                    while parents[at] is not None:
                        prev, hop = parents[at]
                        hops.append(hop)
                        at = prev
                    hops.reverse()
                    return [(cid, forward)] + hops
                if other not in parents:
                    parents[other] = (node, (nxt.id, fwd))
                    queue.append((other, depth + 1))
    return None


# A cycle flow may move an already-balanced partner channel off-center as a
# byproduct; cap how far (in ratio terms) any channel may be displaced.
RATIO_GUARD = 0.2


def _best_cycle_flow(graph, balances, cycle):
    """Integer flow minimizing the cycle's sum of squared (ratio - 1/2),
    subject to liquidity and the per-channel displacement guard."""
    signs, caps, devs, limits = [], [], [], []
    for cid, forward in cycle:
        ch = graph.channel(cid)
        b = balances[cid]
        sign = 1.0 if forward else -1.0
        dev = b / ch.capacity - 0.5
        guard = max(abs(dev), RATIO_GUARD)
        liquidity = b if forward else ch.capacity - b
        # Post-flow deviation dev - sign*delta/c must stay within +/- guard.
        guard_cap = ch.capacity * (guard + sign * dev) if sign > 0 else ch.capacity * (
            guard - dev
        )
        signs.append(sign)
        caps.append(ch.capacity)
        devs.append(dev)
        limits.append(min(liquidity, guard_cap))
    numerator = sum(d * s / c for d, s, c in zip(devs, signs, caps))
    denominator = sum(1.0 / (c * c) for c in caps)
    optimum = numerator / denominator
    ceiling = min(limits)

    def objective(delta):
        return sum((d - s * delta / c) ** 2 for d, s, c in zip(devs, signs, caps))

    base = objective(0.0)
    best_delta, best_improvement = 0, 0.0
    clamped = min(max(optimum, 0.0), float(ceiling))
    for candidate in {int(np.floor(clamped)), int(np.ceil(clamped))}:
        if 0 < candidate <= ceiling:
            improvement = base - objective(candidate)
            if improvement > best_improvement:
                best_delta, best_improvement = candidate, improvement
    return best_delta, best_improvement


# ---------------------------------------------------------------------------
# Experiment sweeps.
# ---------------------------------------------------------------------------


@dataclass
class ExperimentRow:
    arm: str
    pair_index: int
    sender: str
    receiver: str
    amount: int
    parts: int
    result: SessionResult


def _stream_tag(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def session_seed(seed, arm, pair_index, amount, parts) -> np.random.SeedSequence:
    """Independent substream per session so arms are comparable and sessions
    parallelize without ordering effects."""
    return np.random.SeedSequence(
        [int(seed), _stream_tag(arm), int(pair_index), int(amount), int(parts)]
    )


def ensure_static_balances(graph: ChannelGraph, seed) -> ChannelGraph:
    """Fill missing ground-truth balances by sampling each channel's prior
    (channel-id order, dedicated substream: reproducible per seed)."""
    missing = [cid for cid, ch in graph.channels.items() if ch.ground_truth_balance is None]
    if not missing:
        return graph
    rng = np.random.default_rng(
        np.random.SeedSequence([int(seed), _stream_tag("static-balances")])
    )
    balances = {cid: graph.channel(cid).prior.sample(rng) for cid in sorted(missing)}
    return graph.with_balances(balances)


def _run_cell(graph, arm, pair_index, pair, amount, parts, mode, strategy, seed,
              max_attempts, candidates):
    sender, receiver = pair
    rng = np.random.default_rng(session_seed(seed, arm, pair_index, amount, parts))
    task = PaymentTask(sender, receiver, amount, parts)
    try:
        result = run_payment(
            graph, task, mode, strategy, rng, max_attempts, candidates=candidates
        )
    except NoCandidatePaths as exc:
        result = SessionResult(task, False, [], 0.0, failure_reason=str(exc))
    return ExperimentRow(arm, pair_index, sender, receiver, amount, parts, result)


_WORKER_STATE: dict = {}


def _init_worker(graph, pairs, amounts, parts_list, mode, strategy, seed, arm, max_attempts):
    _WORKER_STATE.update(
        graph=graph, pairs=pairs, amounts=amounts, parts_list=parts_list,
        mode=mode, strategy=strategy, seed=seed, arm=arm, max_attempts=max_attempts,
    )


def _run_pair(pair_index):
    st = _WORKER_STATE
    graph, pairs = st["graph"], st["pairs"]
    sender, receiver = pairs[pair_index]
    try:
        candidates = k_shortest_paths(
            graph, sender, receiver, st["strategy"].candidate_count
        )
    except NoPath:
        candidates = []
    rows = []
    for amount in st["amounts"]:
        for parts in st["parts_list"]:
            if amount < parts:
                continue
            if not candidates:
                task = PaymentTask(sender, receiver, amount, parts)
                rows.append(
                    ExperimentRow(
                        st["arm"], pair_index, sender, receiver, amount, parts,
                        SessionResult(task, False, [], 0.0, failure_reason="disconnected"),
                    )
                )
                continue
            rows.append(
                _run_cell(
                    graph, st["arm"], pair_index, pairs[pair_index], amount, parts,
                    st["mode"], st["strategy"], st["seed"], st["max_attempts"],
                    candidates,
                )
            )
    return rows


def run_experiment(
    graph: ChannelGraph,
    pairs,
    amounts,
    parts_list,
    mode: SimulationMode,
    strategy,
    seed,
    arm: str = "default",
    max_attempts: int = 200,
    workers: int = 1,
) -> list:
    """One SessionResult per (pair, amount, parts) cell, deterministic for a
    given seed at any worker count.  Candidate paths are enumerated once per
    pair (unfiltered; per-amount viability is handled by zero-probability
    hops) and shared across the amount grid."""
    pairs = list(pairs)
    args = (graph, pairs, amounts, parts_list, mode, strategy, seed, arm, max_attempts)
    if workers <= 1:
        _init_worker(*args)
        chunks = [_run_pair(i) for i in range(len(pairs))]
    else:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker, initargs=args) as pool:
            chunks = pool.map(_run_pair, range(len(pairs)))
    return [row for chunk in chunks for row in chunk]
