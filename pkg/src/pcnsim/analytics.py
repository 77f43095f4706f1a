"""Closed-form and numeric reliability results.

Covers the distribution of the attempt index at which the k-th part of a
payment succeeds (negative Bernoulli trials), expected attempt counts,
service-level-objective solvers, and optimal equal-split part counts under
the constant-capacity uniform-balance model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "SplitPlan",
    "negative_bernoulli_pmf",
    "expected_attempts",
    "attempts_for_slo_single",
    "attempts_for_slo_mpp",
    "prob_at_least_k_successes",
    "uniform_path_success",
    "break_even_amount",
    "optimal_split_uniform",
    "mixed_model_success",
    "equal_split",
]


@dataclass(frozen=True)
class SplitPlan:
    """Equal split of a payment into `parts` integer amounts summing exactly
    to the total (larger parts first when the division is not exact)."""

    parts: int
    part_amounts: tuple

    @property
    def total(self) -> int:
        return sum(self.part_amounts)


def equal_split(amount: int, parts: int) -> tuple:
    """ceil(amount/parts) for the first amount%parts parts, floor for the rest."""
    if parts < 1:
        raise ValueError(f"parts must be >= 1, got {parts}")
    if amount < parts:
        raise ValueError(f"cannot split {amount} into {parts} non-empty parts")
    q, r = divmod(amount, parts)
    return tuple([q + 1] * r + [q] * (parts - r))


def _check_prob(s: float, name: str = "s"):
    if not (0.0 <= s <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {s}")


def negative_bernoulli_pmf(s: float, k: int, n: int) -> float:
    """Probability that the k-th success lands exactly on trial n, for
    independent trials succeeding with probability s each.

    Equals s * Binomial(k-1 successes in n-1 trials); for k=1 this is the
    geometric pmf s*(1-s)^(n-1).
    """
    _check_prob(s)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k:
        raise ValueError(f"cannot place {k} successes in {n} trials")
    return math.comb(n - 1, k - 1) * s**k * (1.0 - s) ** (n - k)


def expected_attempts(s: float, k: int = 1) -> float:
    """Expected trial count for the k-th success: k/s."""
    _check_prob(s)
    if s == 0.0:
        raise ValueError("success probability 0 gives an unbounded attempt count")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return k / s


def attempts_for_slo_single(s: float, sigma: float) -> int:
    """Smallest n with 1-(1-s)^n > sigma: attempts needed so a single-part
    payment completes with probability above the objective.

    The strict inequality is decided exactly on the binary rationals the
    float arguments denote, so grid values sitting right on a threshold
    (e.g. s=0.9, sigma=0.99) resolve deterministically.
    """
    _check_prob(s)
    if not (0.0 <= sigma < 1.0):
        raise ValueError(f"objective must be in [0, 1), got {sigma}")
    if s == 0.0:
        raise ValueError("objective unreachable at success probability 0")
    if s == 1.0 or sigma == 0.0:
        return 1
    fail = Fraction(1) - Fraction(s)
    target = Fraction(1) - Fraction(sigma)
    n = max(1, math.floor(math.log1p(-sigma) / math.log1p(-s)) + 1)
    while n > 1 and fail ** (n - 1) < target:
        n -= 1
    while fail**n >= target:
        n += 1
    return n


def prob_at_least_k_successes(s: float, k: int, n: int) -> float:
    """P(at least k successes in n independent trials at success prob s)."""
    if n < 0 or k < 0:
        raise ValueError("negative trial or success counts")
    if k == 0:
        return 1.0
    if k > n:
        return 0.0
    tail = 0.0
    for i in range(k):
        tail += math.comb(n, i) * s**i * (1.0 - s) ** (n - i)
    return 1.0 - tail


def _exact_at_least(s: Fraction, k: int, n: int) -> Fraction:
    tail = Fraction(0)
    fail = 1 - s
    for i in range(k):
        tail += math.comb(n, i) * s**i * fail ** (n - i)
    return 1 - tail


def attempts_for_slo_mpp(s: float, k: int, sigma: float, n_cap: int):
    """Smallest n >= k with P(at least k successes in n trials) > sigma,
    scanning n linearly; None when no n <= n_cap qualifies (the split is
    abandoned for this part count).

    A float scan locates the candidate region, then the strict inequality is
    confirmed exactly on the binary rationals, mirroring
    attempts_for_slo_single's boundary behaviour.
    """
    _check_prob(s)
    if not (0.0 <= sigma < 1.0):
        raise ValueError(f"objective must be in [0, 1), got {sigma}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n_cap < k:
        raise ValueError(f"n_cap {n_cap} below the minimum attempt count {k}")
    if s == 0.0:
        raise ValueError("objective unreachable at success probability 0")
    if s == 1.0:
        return k
    n = k
    while n <= n_cap and prob_at_least_k_successes(s, k, n) <= sigma - 1e-9:
        n += 1
    s_frac, sigma_frac = Fraction(s), Fraction(sigma)
    while n <= n_cap:
        if _exact_at_least(s_frac, k, n) > sigma_frac:
            return n
        n += 1
    return None


def uniform_path_success(amount: float, capacity: int, hops: int) -> float:
    """((c+1-a)/(c+1))^hops: success of amount a over `hops` channels of
    equal capacity c with uniformly distributed balances."""
    if hops < 0:
        raise ValueError(f"hops must be >= 0, got {hops}")
    if not (0 <= amount <= capacity + 1):
        raise ValueError(f"amount {amount} outside [0, {capacity + 1}]")
    return ((capacity + 1 - amount) / (capacity + 1)) ** hops


def break_even_amount(capacity: int, hops: int, k1: int, k2: int) -> float:
    """Amount where the expected-attempt curves for k1 and k2 equal parts
    intersect under the constant-capacity uniform model (continuous-limit
    closed form; real-valued)."""
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    if k1 < 1 or k2 < 1:
        raise ValueError("part counts must be >= 1")
    if k1 == k2:
        raise ValueError("equal part counts give coinciding curves")
    ratio = (k2 / k1) ** (1.0 / hops)
    return capacity * (1.0 - ratio) / (1.0 / k2 - ratio / k1)


def optimal_split_uniform(amount: int, capacity: int, hops: int, k_max: int) -> SplitPlan:
    """Part count in [1, k_max] minimizing k / uniform_path_success(a/k)
    (real-valued a/k in the objective; integer rounding only in the plan)."""
    if amount < 1:
        raise ValueError(f"amount must be >= 1, got {amount}")
    if hops < 1:
        raise ValueError(f"hops must be >= 1, got {hops}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    if amount / k_max > capacity:
        raise ValueError(
            f"even {k_max} parts of {amount} exceed the channel capacity {capacity}"
        )
    best_k, best_value = None, math.inf
    for k in range(1, min(k_max, amount) + 1):
        part = amount / k
        if part > capacity:
            continue
        value = k / uniform_path_success(part, capacity, hops)
        if value < best_value:
            best_k, best_value = k, value
    return SplitPlan(best_k, equal_split(amount, best_k))


def mixed_model_success(amount: int, capacity: int, hops: int, p_bimodal: float) -> float:
    """Path success when a fraction p of the hops follow the balanced bimodal
    balance model and the rest are uniform: (1/2)^(p*l) * (u(a))^((1-p)*l)."""
    _check_prob(p_bimodal, "p_bimodal")
    if hops < 0:
        raise ValueError(f"hops must be >= 0, got {hops}")
    if not (0 <= amount <= capacity):
        raise ValueError(f"amount {amount} outside [0, {capacity}]")
    uniform_factor = (capacity - amount + 1) / (capacity + 1)
    return 0.5 ** (p_bimodal * hops) * uniform_factor ** ((1.0 - p_bimodal) * hops)
