"""Discrete probability models for channel balances.

A channel of capacity ``c`` keeps an integer balance between 0 and ``c`` on
its ``node_a`` side; the rest sits with ``node_b``.  Each distribution below
models that balance as a discrete random variable and supports exact
probability queries, Bayesian conditioning on payment outcomes, sampling,
and Shannon entropy (natural log throughout).

All distributions except the truncated normal are piecewise constant (a few
point masses plus uniform blocks), so every query has an exact closed form
at any capacity.  The truncated normal uses materialized mass tables when
its effective support is small enough and Gaussian-integral approximations
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ImpossibleEvent",
    "BalanceDistribution",
    "Uniform",
    "IntervalUniform",
    "Degenerate",
    "Bimodal",
    "NormalTruncated",
    "Mixed",
    "PiecewiseDistribution",
    "Restricted",
    "channel_failure_prob",
    "channel_success_prob",
    "condition_on_failure",
    "condition_on_success",
    "sample_balance",
    "entropy",
    "masses",
]

# Largest support for which we are willing to materialize a full mass vector.
MAX_ARRAY_SUPPORT = 4_000_000

# Truncated-normal mass tables are cached per distribution; keep them small
# enough that a population of distinct channel capacities stays cheap, and
# fall back to Gaussian integrals above this.
NORMAL_TABLE_LIMIT = 200_001

_SQRT_2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ImpossibleEvent(ValueError):
    """Conditioning on an event that has probability zero."""


# ---------------------------------------------------------------------------
# Piecewise helpers.
#
# A "pieces" decomposition is (segments, points): segments are disjoint
# integer ranges (lo, hi, mass_per_point) of equal point masses, points are
# isolated (x, mass) atoms outside every segment.  Pieces are sorted and
# carry strictly positive masses.
# ---------------------------------------------------------------------------


def _pieces_total(segments, points):
    return sum((hi - lo + 1) * m for lo, hi, m in segments) + sum(m for _, m in points)


def _pieces_interval_mass(segments, points, lo, hi):
    total = 0.0
    for slo, shi, m in segments:
        olo, ohi = max(slo, lo), min(shi, hi)
        if olo <= ohi:
            total += (ohi - olo + 1) * m
    for x, m in points:
        if lo <= x <= hi:
            total += m
    return total


def _pieces_pmf(segments, points, x):
    for slo, shi, m in segments:
        if slo <= x <= shi:
            return m
    for px, m in points:
        if px == x:
            return m
    return 0.0


def _pieces_entropy(segments, points):
    h = 0.0
    for lo, hi, m in segments:
        h -= (hi - lo + 1) * m * math.log(m)
    for _, m in points:
        h -= m * math.log(m)
    return h


def _pieces_support(segments, points):
    positions = [lo for lo, _, _ in segments] + [x for x, _ in points]
    ends = [hi for _, hi, _ in segments] + [x for x, _ in points]
    return min(positions), max(ends)


def _pieces_restrict(segments, points, lo, hi):
    """Intersect with [lo, hi] and renormalize. Returns (segments, points, prior_mass)."""
    new_segments = []
    new_points = []
    for slo, shi, m in segments:
        olo, ohi = max(slo, lo), min(shi, hi)
        if olo <= ohi:
            new_segments.append((olo, ohi, m))
    for x, m in points:
        if lo <= x <= hi:
            new_points.append((x, m))
    mass = _pieces_total(new_segments, new_points)
    if mass <= 0.0:
        return (), (), 0.0
    scale = 1.0 / mass
    new_segments = tuple((a, b, m * scale) for a, b, m in new_segments)
    new_points = tuple((x, m * scale) for x, m in new_points)
    return new_segments, new_points, mass


def _pieces_sample(segments, points, rng):
    u = rng.random()
    acc = 0.0
    for lo, hi, m in segments:
        block = (hi - lo + 1) * m
        if u < acc + block:
            return min(hi, lo + int((u - acc) / m))
        acc += block
    for x, m in points:
        acc += m
        if u < acc:
            return x
    # Rounding slack: return the largest supported value.
    return _pieces_support(segments, points)[1]


# ---------------------------------------------------------------------------
# Distributions.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BalanceDistribution:
    """Base for all balance models on {0, ..., capacity}."""

    capacity: int

    def _check_capacity(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")

    def __post_init__(self):
        self._check_capacity()

    # -- per-variant primitives -------------------------------------------

    def pieces(self):
        """(segments, points) decomposition, or None if not piecewise constant."""
        return None

    def interval_mass(self, lo: int, hi: int) -> float:
        """P(lo <= X <= hi), with the interval clamped to {0, ..., capacity}."""
        raise NotImplementedError

    def pmf(self, x: int) -> float:
        raise NotImplementedError

    def sample(self, rng) -> int:
        raise NotImplementedError

    def entropy(self) -> float:
        raise NotImplementedError

    def support(self) -> tuple[int, int]:
        """Smallest and largest balance carrying positive mass."""
        raise NotImplementedError

    def _restrict(self, lo: int, hi: int) -> "BalanceDistribution":
        raise NotImplementedError

    # -- shared queries ----------------------------------------------------

    def failure_prob(self, amount: int) -> float:
        """P(X < amount): the channel cannot forward `amount` in the a->b direction."""
        if amount <= 0:
            return 0.0
        if amount > self.capacity:
            return 1.0
        return min(1.0, self.interval_mass(0, amount - 1))

    def success_prob(self, amount: int) -> float:
        """P(X >= amount) as the exact complement of failure_prob."""
        return 1.0 - self.failure_prob(amount)

    def restrict(self, lo: int, hi: int) -> "BalanceDistribution":
        """Posterior given lo <= X <= hi. Raises ImpossibleEvent on zero mass."""
        lo = max(lo, 0)
        hi = min(hi, self.capacity)
        if lo > hi:
            raise ImpossibleEvent(f"empty balance interval [{lo}, {hi}]")
        slo, shi = self.support()
        if lo <= slo and hi >= shi:
            return self
        if self.interval_mass(lo, hi) <= 0.0:
            raise ImpossibleEvent(
                f"balance interval [{lo}, {hi}] has zero prior probability"
            )
        return self._restrict(lo, hi)


@dataclass(frozen=True)
class Uniform(BalanceDistribution):
    """Every balance 0..capacity equally likely: P(X=b) = 1/(capacity+1)."""

    def pieces(self):
        return ((0, self.capacity, 1.0 / (self.capacity + 1)),), ()

    def interval_mass(self, lo, hi):
        lo, hi = max(lo, 0), min(hi, self.capacity)
        if lo > hi:
            return 0.0
        return (hi - lo + 1) / (self.capacity + 1)

    def pmf(self, x):
        if 0 <= x <= self.capacity:
            return 1.0 / (self.capacity + 1)
        return 0.0

    def sample(self, rng):
        return int(rng.integers(0, self.capacity + 1))

    def entropy(self):
        return math.log(self.capacity + 1)

    def support(self):
        return 0, self.capacity

    def _restrict(self, lo, hi):
        return IntervalUniform(self.capacity, lo, hi)


@dataclass(frozen=True)
class IntervalUniform(BalanceDistribution):
    """Uniform on a sub-interval {lo, ..., hi}: the posterior of a Uniform prior."""

    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        self._check_capacity()
        if not (0 <= self.lo <= self.hi <= self.capacity):
            raise ValueError(
                f"need 0 <= lo <= hi <= capacity, got lo={self.lo} hi={self.hi} "
                f"capacity={self.capacity}"
            )

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def pieces(self):
        return ((self.lo, self.hi, 1.0 / self.size),), ()

    def interval_mass(self, lo, hi):
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if lo > hi:
            return 0.0
        return (hi - lo + 1) / self.size

    def pmf(self, x):
        if self.lo <= x <= self.hi:
            return 1.0 / self.size
        return 0.0

    def sample(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))

    def entropy(self):
        return math.log(self.size)

    def support(self):
        return self.lo, self.hi

    def _restrict(self, lo, hi):
        return IntervalUniform(self.capacity, max(lo, self.lo), min(hi, self.hi))


@dataclass(frozen=True)
class Degenerate(BalanceDistribution):
    """Fully known balance."""

    balance: int = 0

    def __post_init__(self):
        self._check_capacity()
        if not (0 <= self.balance <= self.capacity):
            raise ValueError(
                f"balance {self.balance} outside [0, {self.capacity}]"
            )

    def pieces(self):
        return (), ((self.balance, 1.0),)

    def interval_mass(self, lo, hi):
        return 1.0 if lo <= self.balance <= hi else 0.0

    def pmf(self, x):
        return 1.0 if x == self.balance else 0.0

    def sample(self, rng):
        return self.balance

    def entropy(self):
        return 0.0

    def support(self):
        return self.balance, self.balance

    def _restrict(self, lo, hi):
        return self


@dataclass(frozen=True)
class Bimodal(BalanceDistribution):
    """All capacity on one side: mass at b=0 (prob low_side_prob) or b=capacity."""

    low_side_prob: float = 0.5

    def __post_init__(self):
        self._check_capacity()
        if not (0.0 <= self.low_side_prob <= 1.0):
            raise ValueError(f"low_side_prob {self.low_side_prob} outside [0, 1]")

    def pieces(self):
        pts = []
        if self.low_side_prob > 0.0:
            pts.append((0, self.low_side_prob))
        if self.low_side_prob < 1.0:
            pts.append((self.capacity, 1.0 - self.low_side_prob))
        return (), tuple(pts)

    def interval_mass(self, lo, hi):
        return _pieces_interval_mass(*self.pieces(), lo, hi)

    def pmf(self, x):
        return _pieces_pmf(*self.pieces(), x)

    def sample(self, rng):
        return 0 if rng.random() < self.low_side_prob else self.capacity

    def entropy(self):
        return _pieces_entropy(*self.pieces())

    def support(self):
        return _pieces_support(*self.pieces())

    def _restrict(self, lo, hi):
        segs, pts, _ = _pieces_restrict(*self.pieces(), lo, hi)
        return _from_pieces(self.capacity, segs, pts)


@dataclass(frozen=True)
class Mixed(BalanceDistribution):
    """Mixture: with prob p_bimodal a balanced bimodal channel, else uniform."""

    p_bimodal: float = 0.0

    def __post_init__(self):
        self._check_capacity()
        if not (0.0 <= self.p_bimodal <= 1.0):
            raise ValueError(f"p_bimodal {self.p_bimodal} outside [0, 1]")

    def pieces(self):
        c, p = self.capacity, self.p_bimodal
        uniform_mass = (1.0 - p) / (c + 1)
        end_mass = p / 2.0 + uniform_mass
        segs = ()
        if c >= 2 and uniform_mass > 0.0:
            segs = ((1, c - 1, uniform_mass),)
        pts = tuple(pm for pm in ((0, end_mass), (c, end_mass)) if pm[1] > 0.0)
        return segs, pts

    def interval_mass(self, lo, hi):
        return _pieces_interval_mass(*self.pieces(), lo, hi)

    def pmf(self, x):
        return _pieces_pmf(*self.pieces(), x)

    def sample(self, rng):
        if rng.random() < self.p_bimodal:
            return 0 if rng.random() < 0.5 else self.capacity
        return int(rng.integers(0, self.capacity + 1))

    def entropy(self):
        return _pieces_entropy(*self.pieces())

    def support(self):
        return _pieces_support(*self.pieces())

    def _restrict(self, lo, hi):
        segs, pts, _ = _pieces_restrict(*self.pieces(), lo, hi)
        return _from_pieces(self.capacity, segs, pts)


@dataclass(frozen=True)
class PiecewiseDistribution(BalanceDistribution):
    """Generic piecewise-constant posterior (uniform blocks plus atoms)."""

    segments: tuple = ()
    points: tuple = ()

    def __post_init__(self):
        self._check_capacity()
        if not self.segments and not self.points:
            raise ValueError("piecewise distribution needs at least one piece")

    def pieces(self):
        return self.segments, self.points

    def interval_mass(self, lo, hi):
        return _pieces_interval_mass(self.segments, self.points, lo, hi)

    def pmf(self, x):
        return _pieces_pmf(self.segments, self.points, x)

    def sample(self, rng):
        return _pieces_sample(self.segments, self.points, rng)

    def entropy(self):
        return _pieces_entropy(self.segments, self.points)

    def support(self):
        return _pieces_support(self.segments, self.points)

    def _restrict(self, lo, hi):
        segs, pts, _ = _pieces_restrict(self.segments, self.points, lo, hi)
        return _from_pieces(self.capacity, segs, pts)


def _from_pieces(capacity, segments, points):
    """Collapse a pieces decomposition into the simplest distribution type."""
    if not segments and len(points) == 1:
        return Degenerate(capacity, points[0][0])
    if len(segments) == 1 and not points:
        lo, hi, _ = segments[0]
        return IntervalUniform(capacity, lo, hi)
    return PiecewiseDistribution(capacity, tuple(segments), tuple(points))


@dataclass(frozen=True)
class NormalTruncated(BalanceDistribution):
    """Discretized Gaussian: mass at b proportional to the density at b,
    truncated to [0, capacity] and renormalized.

    Exact mass tables are materialized while the effective support (about
    78 standard deviations, beyond which float64 weights underflow to zero)
    fits in NORMAL_TABLE_LIMIT; above that, interval masses fall back to
    continuity-corrected Gaussian integrals and the entropy to the
    continuous truncated-normal formula.
    """

    mean: float = 0.0
    stddev: float = 1.0

    def __post_init__(self):
        self._check_capacity()
        if not (self.stddev > 0.0):
            raise ValueError(f"stddev must be positive, got {self.stddev}")
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")

    # Window around the in-range mode outside which peak-normalized weights
    # underflow to exactly 0.0 in float64.
    def _window(self):
        center = min(max(int(round(self.mean)), 0), self.capacity)
        w = int(math.ceil(39.0 * self.stddev)) + 1
        return max(0, center - w), min(self.capacity, center + w)

    def _exact(self) -> bool:
        lo, hi = self._window()
        return hi - lo + 1 <= NORMAL_TABLE_LIMIT

    def _phi_integral(self, lo: int, hi: int) -> float:
        """Continuity-corrected integral of the density over {lo, ..., hi}."""
        zl = (lo - 0.5 - self.mean) / self.stddev
        zh = (hi + 0.5 - self.mean) / self.stddev
        return 0.5 * (math.erf(zh / _SQRT_2) - math.erf(zl / _SQRT_2))

    def interval_mass(self, lo, hi):
        lo, hi = max(lo, 0), min(hi, self.capacity)
        if lo > hi:
            return 0.0
        if self._exact():
            off, cum = _normal_tables(self)
            return _cum_range(cum, lo - off, hi - off) / cum[-1]
        denom = self._phi_integral(0, self.capacity)
        if denom <= 0.0:
            raise ValueError("truncated normal carries no representable mass")
        return min(1.0, self._phi_integral(lo, hi) / denom)

    def pmf(self, x):
        if not (0 <= x <= self.capacity):
            return 0.0
        if self._exact():
            off, cum = _normal_tables(self)
            i = x - off
            if i < 0 or i >= len(cum):
                return 0.0
            prev = cum[i - 1] if i > 0 else 0.0
            return (cum[i] - prev) / cum[-1]
        z = (x - self.mean) / self.stddev
        density = math.exp(-0.5 * z * z) / (self.stddev * math.sqrt(2 * math.pi))
        return density / self._phi_integral(0, self.capacity)

    def sample(self, rng):
        if self._exact():
            off, cum = _normal_tables(self)
            u = rng.random() * cum[-1]
            return off + int(np.searchsorted(cum, u, side="right"))
        return _sample_by_bisection(self, rng)

    def entropy(self):
        if self._exact():
            off, cum = _normal_tables(self)
            p = np.diff(cum, prepend=0.0) / cum[-1]
            p = p[p > 0.0]
            return float(-np.sum(p * np.log(p)))
        return _truncated_normal_entropy(self.mean, self.stddev, 0, self.capacity)

    def support(self):
        if self._exact():
            off, cum = _normal_tables(self)
            return off, off + len(cum) - 1
        return 0, self.capacity

    def _restrict(self, lo, hi):
        return Restricted(self.capacity, self, lo, hi)


def _truncated_normal_entropy(mean, stddev, lo, hi):
    """Continuous truncated-normal entropy; close to the lattice sum for
    stddev well above the unit grid spacing."""
    alpha = (lo - 0.5 - mean) / stddev
    beta = (hi + 0.5 - mean) / stddev
    z = 0.5 * (math.erf(beta / _SQRT_2) - math.erf(alpha / _SQRT_2))
    if z <= 0.0:
        return 0.0

    def pdf(t):
        return math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)

    return (
        0.5
        + _LOG_SQRT_2PI
        + math.log(stddev * z)
        + (alpha * pdf(alpha) - beta * pdf(beta)) / (2.0 * z)
    )


def _sample_by_bisection(dist, rng):
    """Inverse-CDF sampling using only interval_mass queries."""
    u = rng.random()
    lo, hi = dist.support()
    while lo < hi:
        mid = (lo + hi) // 2
        if dist.interval_mass(dist.support()[0], mid) >= u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@lru_cache(maxsize=128)
def _normal_tables(dist: NormalTruncated):
    """Peak-normalized weights over the effective window, as a cumulative sum."""
    lo, hi = dist._window()
    xs = np.arange(lo, hi + 1, dtype=np.float64)
    z = (xs - dist.mean) / dist.stddev
    z2 = 0.5 * z * z
    logw = -(z2 - z2.min())
    w = np.exp(logw)
    return lo, np.cumsum(w)


def _cum_range(cum, i, j):
    """Sum of table entries i..j (clamped), given their cumulative sums."""
    i = max(i, 0)
    j = min(j, len(cum) - 1)
    if i > j:
        return 0.0
    lower = cum[i - 1] if i > 0 else 0.0
    return float(cum[j] - lower)


@dataclass(frozen=True)
class Restricted(BalanceDistribution):
    """A base distribution conditioned to an interval (used for posteriors of
    distributions without a piecewise-constant form)."""

    base: BalanceDistribution = None
    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        self._check_capacity()
        if self.base is None or self.base.capacity != self.capacity:
            raise ValueError("base distribution must share the capacity")
        if not (0 <= self.lo <= self.hi <= self.capacity):
            raise ValueError(f"bad restriction interval [{self.lo}, {self.hi}]")

    def _base_mass(self) -> float:
        return self.base.interval_mass(self.lo, self.hi)

    def interval_mass(self, lo, hi):
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if lo > hi:
            return 0.0
        return min(1.0, self.base.interval_mass(lo, hi) / self._base_mass())

    def pmf(self, x):
        if not (self.lo <= x <= self.hi):
            return 0.0
        return self.base.pmf(x) / self._base_mass()

    def sample(self, rng):
        return _sample_by_bisection(self, rng)

    def entropy(self):
        if isinstance(self.base, NormalTruncated):
            if self.base._exact():
                off, cum = _normal_tables(self.base)
                lo, hi = max(self.lo, off), min(self.hi, off + len(cum) - 1)
                w = np.diff(cum, prepend=0.0)[lo - off : hi - off + 1]
                p = w / w.sum()
                p = p[p > 0.0]
                return float(-np.sum(p * np.log(p)))
            return _truncated_normal_entropy(
                self.base.mean, self.base.stddev, self.lo, self.hi
            )
        raise NotImplementedError(
            f"entropy of restricted {type(self.base).__name__} not supported"
        )

    def support(self):
        blo, bhi = self.base.support()
        return max(self.lo, blo), min(self.hi, bhi)

    def _restrict(self, lo, hi):
        return Restricted(
            self.capacity, self.base, max(lo, self.lo), min(hi, self.hi)
        )


# ---------------------------------------------------------------------------
# Module-level operations.
# ---------------------------------------------------------------------------


def channel_failure_prob(dist: BalanceDistribution, amount: int) -> float:
    """P(X < amount): probability the channel cannot forward `amount`."""
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    return dist.failure_prob(amount)


def channel_success_prob(dist: BalanceDistribution, amount: int) -> float:
    """P(X >= amount) = 1 - P(X < amount)."""
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    return dist.success_prob(amount)


def condition_on_failure(dist: BalanceDistribution, amount: int) -> BalanceDistribution:
    """Posterior after observing that `amount` could not be forwarded (X < amount)."""
    if dist.failure_prob(amount) <= 0.0:
        raise ImpossibleEvent(
            f"observed failure at {amount} but P(X < {amount}) = 0"
        )
    return dist.restrict(0, amount - 1)


def condition_on_success(dist: BalanceDistribution, amount: int) -> BalanceDistribution:
    """Posterior after observing that `amount` was forwarded (X >= amount)."""
    if dist.success_prob(amount) <= 0.0:
        raise ImpossibleEvent(
            f"observed success at {amount} but P(X >= {amount}) = 0"
        )
    return dist.restrict(amount, dist.capacity)


def sample_balance(dist: BalanceDistribution, rng) -> int:
    """Draw one balance from the distribution using the given numpy Generator."""
    return dist.sample(rng)


def entropy(dist: BalanceDistribution) -> float:
    """Shannon entropy in nats, with 0*log(0) taken as 0."""
    return dist.entropy()


def masses(dist: BalanceDistribution) -> np.ndarray:
    """Full mass vector over {0, ..., capacity}. Only for small capacities."""
    n = dist.capacity + 1
    if n > MAX_ARRAY_SUPPORT:
        raise ValueError(f"support of size {n} is too large to materialize")
    pieces = dist.pieces()
    out = np.zeros(n)
    if pieces is not None:
        segments, points = pieces
        for lo, hi, m in segments:
            out[lo : hi + 1] = m
        for x, m in points:
            out[x] += m
        return out
    for x in range(n):
        out[x] = dist.pmf(x)
    return out
