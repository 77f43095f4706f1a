"""Privacy accounting: how much a sender learns about channel balances.

The gain of one observation is the Kullback-Leibler divergence of the
posterior belief from the belief held just before it (nats).  A session's
total gain compares each channel's final posterior against its session-start
prior, so channels probed by several attempts are counted once.
"""

from __future__ import annotations

import math
from typing import Mapping, Optional

import numpy as np

from .model import (
    BalanceDistribution,
    Degenerate,
    ImpossibleEvent,
    Restricted,
    masses,
)

__all__ = [
    "SupportViolation",
    "kl_divergence",
    "BeliefState",
    "observe_attempt",
    "session_information_gain",
]


class SupportViolation(ValueError):
    """Posterior puts mass where the prior has none (KL undefined)."""


def _pieces_kl(post_pieces, prior_pieces) -> float:
    """Exact KL between two piecewise-constant distributions."""
    post_segments, post_points = post_pieces
    prior_segments, prior_points = prior_pieces
    prior_point_mass = dict(prior_points)
    total = 0.0

    def prior_mass_at(x):
        for lo, hi, m in prior_segments:
            if lo <= x <= hi:
                return m
        return prior_point_mass.get(x, 0.0)

    for lo, hi, mp in post_segments:
        remaining = [(lo, hi)]
        for plo, phi, mq in prior_segments:
            next_remaining = []
            for rlo, rhi in remaining:
                olo, ohi = max(rlo, plo), min(rhi, phi)
                if olo > ohi:
                    next_remaining.append((rlo, rhi))
                    continue
                total += (ohi - olo + 1) * mp * math.log(mp / mq)
                if rlo < olo:
                    next_remaining.append((rlo, olo - 1))
                if ohi < rhi:
                    next_remaining.append((ohi + 1, rhi))
            remaining = next_remaining
        for rlo, rhi in remaining:
            for x in range(rlo, rhi + 1):
                mq = prior_point_mass.get(x)
                if mq is None:
                    raise SupportViolation(
                        f"posterior mass at {x} where the prior has none"
                    )
                total += mp * math.log(mp / mq)

    for x, mp in post_points:
        mq = prior_mass_at(x)
        if mq <= 0.0:
            raise SupportViolation(f"posterior mass at {x} where the prior has none")
        total += mp * math.log(mp / mq)
    return max(0.0, total)


def kl_divergence(posterior: BalanceDistribution, prior: BalanceDistribution) -> float:
    """KL(posterior || prior) in nats; requires absolute continuity."""
    if posterior.capacity != prior.capacity:
        raise ValueError("posterior and prior model different capacities")
    if posterior is prior or posterior == prior:
        return 0.0
    # A distribution conditioned to an interval diverges from its own base by
    # exactly -log(base mass of the interval).
    if isinstance(posterior, Restricted) and posterior.base == prior:
        return -math.log(prior.interval_mass(posterior.lo, posterior.hi))
    if (
        isinstance(posterior, Restricted)
        and isinstance(prior, Restricted)
        and posterior.base == prior.base
    ):
        if not (prior.lo <= posterior.lo and posterior.hi <= prior.hi):
            raise SupportViolation("posterior support escapes the prior interval")
        return -math.log(prior.interval_mass(posterior.lo, posterior.hi))

    post_pieces = posterior.pieces()
    prior_pieces = prior.pieces()
    if post_pieces is not None and prior_pieces is not None:
        return _pieces_kl(post_pieces, prior_pieces)

    # Mixed-shape fallback: explicit mass vectors (small capacities only).
    p = masses(posterior)
    q = masses(prior)
    support = p > 0.0
    if (q[support] <= 0.0).any():
        raise SupportViolation("posterior mass outside the prior support")
    ps = p[support]
    return max(0.0, float((ps * (np.log(ps) - np.log(q[support]))).sum()))


class BeliefState:
    """Per-channel balance beliefs for one payment session.

    Beliefs are keyed by channel id and always describe the node_a-side
    balance; directional queries and observations translate send directions
    into events on that variable, so evidence gathered in one direction
    automatically constrains the other.
    """

    def __init__(self, priors: Mapping[str, BalanceDistribution]):
        self._initial = dict(priors)
        self._current = dict(priors)

    @classmethod
    def from_graph(cls, graph, known_balances: Optional[Mapping[str, int]] = None):
        """Priors from the graph; channels with known balances (the sender's
        own) get pinned beliefs."""
        priors = {cid: ch.prior for cid, ch in graph.channels.items()}
        if known_balances:
            for cid, balance in known_balances.items():
                priors[cid] = Degenerate(graph.channel(cid).capacity, balance)
        return cls(priors)

    def posterior(self, channel_id: str) -> BalanceDistribution:
        return self._current[channel_id]

    def initial(self, channel_id: str) -> BalanceDistribution:
        return self._initial[channel_id]

    def channel_ids(self):
        return self._current.keys()

    def directional_success_prob(self, channel, forward: bool, amount: int) -> float:
        """P(the sending side of `channel` holds at least `amount`) under the
        current posterior."""
        dist = self._current[channel.id]
        if forward:
            return dist.success_prob(amount)
        return dist.failure_prob(dist.capacity - amount + 1)

    def observe_attempt(
        self,
        path,
        amount: int,
        failing_hop: Optional[int] = None,
        flow_offsets=None,
    ) -> float:
        """Condition beliefs on one attempt's outcome; returns the attempt's
        information gain (sum of per-hop KL against the pre-attempt belief).

        Hops before failing_hop forwarded the amount (success events), the
        failing hop could not (failure event), later hops are untouched; no
        failing_hop means every hop succeeded.  flow_offsets shifts the
        per-hop thresholds by balance already moved in this session.
        """
        if failing_hop is not None and not (0 <= failing_hop < len(path.hops)):
            raise ValueError(f"failing hop {failing_hop} outside the path")
        touched = len(path.hops) if failing_hop is None else failing_hop + 1
        gain = 0.0
        for index in range(touched):
            hop = path.hops[index]
            offset = flow_offsets[index] if flow_offsets else 0
            effective = amount + offset if hop.forward else amount - offset
            old = self._current[hop.channel.id]
            capacity = hop.channel.capacity
            failed = failing_hop is not None and index == failing_hop
            if failed:
                if hop.forward:
                    if old.failure_prob(effective) <= 0.0:
                        raise ImpossibleEvent(
                            f"channel {hop.channel.id}: observed failure at "
                            f"{effective} contradicts the current belief"
                        )
                    new = old.restrict(0, effective - 1)
                else:
                    new = old.restrict(capacity - effective + 1, capacity)
            else:
                if hop.forward:
                    new = old.restrict(effective, capacity)
                else:
                    new = old.restrict(0, capacity - effective)
            if new is not old:
                gain += kl_divergence(new, old)
                self._current[hop.channel.id] = new
        return gain

    def session_information_gain(self) -> float:
        """Sum over channels of KL(final posterior || session-start prior)."""
        total = 0.0
        for cid, current in self._current.items():
            initial = self._initial[cid]
            if current is initial:
                continue
            total += kl_divergence(current, initial)
        return total


def observe_attempt(
    beliefs: BeliefState, path, amount: int, failing_hop: Optional[int] = None
) -> BeliefState:
    """Condition `beliefs` on an attempt outcome (in place) and return it."""
    beliefs.observe_attempt(path, amount, failing_hop)
    return beliefs


def session_information_gain(beliefs: BeliefState) -> float:
    return beliefs.session_information_gain()
