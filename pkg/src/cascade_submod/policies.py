"""Adaptive policies: fixed sequences, the random baseline, π_A, π_B and greedy-plus.

A policy maps the current partial realization to the next item, or ``None``
(stop). Greedy policies memoize their decision per canonical ψ, so a policy
object is cheap to reuse across realizations and episodes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Instance, PartialRealization
from .errors import InvalidInputError
from .sequences import alpha, rho_star, virtual_costs
from .utility import UtilityModel

# Marginals at or below this are treated as exactly zero when ranking.
ZERO_GAIN = 1e-12
BUDGET_SLACK = 1e-12


class Policy:
    name = "policy"
    deterministic = True

    def next_item(self, psi: PartialRealization) -> int | None:
        raise NotImplementedError

    def for_episode(self, seed: int) -> Policy:
        """The policy to run in one simulated episode (stochastic policies reseed)."""
        return self


class FixedSequencePolicy(Policy):
    def __init__(self, seq: Sequence[int]):
        seq = [int(i) for i in seq]
        if len(set(seq)) != len(seq):
            raise InvalidInputError(f"fixed sequence {seq} has duplicates")
        self.seq = tuple(seq)
        self.name = "fixed:" + ",".join(map(str, self.seq))

    def next_item(self, psi):
        for i in self.seq:
            if i not in psi.dom:
                return i
        return None


def fixed_sequence_policy(seq: Sequence[int]) -> FixedSequencePolicy:
    return FixedSequencePolicy(seq)


def psi_hash(psi: PartialRealization) -> int:
    """Stable 64-bit hash of the canonical observation set."""
    raw = ";".join(f"{i}:{s}" for i, s in psi.key).encode()
    return int.from_bytes(hashlib.blake2b(raw, digest_size=8).digest(), "little")


class RandomPolicy(Policy):
    """Uniformly random unselected item.

    Each decision draws from a PCG64 stream seeded by
    ``SeedSequence([seed, |dom ψ|, psi_hash(ψ)])``, so equal ψ give equal
    choices for a fixed seed. In simulation a fresh seed is drawn per episode.
    """

    name = "random"

    def __init__(self, seed: int, n_items: int):
        self.seed = int(seed)
        self.n_items = int(n_items)

    def next_item(self, psi):
        rest = [i for i in range(self.n_items) if i not in psi.dom]
        if not rest:
            return None
        ss = np.random.SeedSequence([self.seed, len(psi), psi_hash(psi)])
        k = int(np.random.Generator(np.random.PCG64(ss)).integers(len(rest)))
        return rest[k]

    def for_episode(self, seed):
        return RandomPolicy(seed, self.n_items)


def random_policy(seed: int, n_items: int) -> RandomPolicy:
    return RandomPolicy(seed, n_items)


class _GreedyBase(Policy):
    def __init__(self, instance: Instance, utility: UtilityModel):
        self.instance = instance
        self.utility = utility
        self.costs = virtual_costs(instance.deltas)
        self._memo: dict[tuple, int | None] = {}

    def next_item(self, psi):
        key = psi.key
        if key not in self._memo:
            self._memo[key] = self._decide(psi)
        return self._memo[key]

    def _decide(self, psi) -> int | None:
        raise NotImplementedError

    def ratio_choice(self, psi) -> int | None:
        return ratio_argmax(self.utility.marginals(self.instance, psi), self.costs, psi.dom)


def ratio_key(gain: float, cost: float, item: int) -> tuple:
    """Sort key (ascending = better) for the benefit-to-cost order.

    Tier 0: zero cost and positive gain, by gain. Tier 1: finite positive
    cost and positive gain, by gain/cost. Tier 2: zero gain or infinite cost
    (ratio 0). Ties: larger gain, then smaller id.
    """
    if gain <= ZERO_GAIN or math.isinf(cost):
        return (2, 0.0, -max(gain, 0.0), item)
    if cost == 0.0:
        return (0, -gain, -gain, item)
    return (1, -gain / cost, -gain, item)


def ratio_argmax(gains: np.ndarray, costs: np.ndarray, observed) -> int | None:
    best = None
    for i in range(len(gains)):
        if i in observed:
            continue
        k = ratio_key(float(gains[i]), float(costs[i]), i)
        if best is None or k < best:
            best = k
    return None if best is None else best[3]


class BestSingletonPolicy(_GreedyBase):
    """π_A: best expected singleton first, then remaining items by ascending id."""

    name = "pi-a"

    def __init__(self, instance, utility):
        super().__init__(instance, utility)
        gains = utility.marginals(instance, PartialRealization())
        self.first = int(np.argmax(gains))  # first maximum = smallest id on ties
        self.order = (self.first,) + tuple(i for i in range(instance.m) if i != self.first)

    def _decide(self, psi):
        for i in self.order:
            if i not in psi.dom:
                return i
        return None


class BenefitCostPolicy(_GreedyBase):
    """π_B: largest ``Δ(i|ψ)/c(i)`` while any item is left; never stops early."""

    name = "pi-b"

    def _decide(self, psi):
        return self.ratio_choice(psi)


class RestrictedBenefitCostPolicy(_GreedyBase):
    """π_B with a virtual-cost budget ``−ln ρ``; the first violating item is still taken."""

    name = "pi-b-restricted"

    def __init__(self, instance, utility, rho: float):
        if not 0.0 < rho <= 1.0:
            raise InvalidInputError(f"rho={rho!r} must be in (0, 1]")
        super().__init__(instance, utility)
        self.rho = rho
        self.budget = -math.log(rho)

    def spent(self, psi) -> float:
        return math.fsum(self.costs[i] for i in psi.dom)

    def _decide(self, psi):
        # The budget is exceeded only by the single overflow item, after which we stop.
        if self.spent(psi) > self.budget + BUDGET_SLACK:
            return None
        return self.ratio_choice(psi)


def pi_A(instance: Instance, utility: UtilityModel) -> BestSingletonPolicy:
    return BestSingletonPolicy(instance, utility)


def pi_B(instance: Instance, utility: UtilityModel) -> BenefitCostPolicy:
    return BenefitCostPolicy(instance, utility)


def pi_B_restricted(instance: Instance, utility: UtilityModel, rho: float) -> RestrictedBenefitCostPolicy:
    return RestrictedBenefitCostPolicy(instance, utility, rho)


@dataclass
class MixturePolicy:
    """Randomized choice of one component policy per episode."""

    components: tuple[tuple[float, Policy], ...]
    name: str = "mixture"

    def __post_init__(self):
        self.components = tuple((float(w), p) for w, p in self.components)
        if any(w <= 0 for w, _ in self.components):
            raise InvalidInputError("mixture weights must be > 0")
        total = math.fsum(w for w, _ in self.components)
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"mixture weights sum to {total!r}")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.components)

    def pick(self, u: float) -> Policy:
        """Component selected by a uniform draw ``u ∈ [0, 1)``."""
        acc = 0.0
        for w, p in self.components:
            acc += w
            if u < acc:
                return p
        return self.components[-1][1]


def greedy_plus(instance: Instance, utility: UtilityModel, rho: float | None = None) -> MixturePolicy:
    """π_A with probability ``1 − α(ρ)``, π_B with probability ``α(ρ)``.

    The component coin is drawn by the simulator once per episode; exact
    evaluation combines the components by weight.
    """
    rho = rho_star() if rho is None else rho
    a = alpha(rho)
    comps = []
    if a < 1.0:
        comps.append((1.0 - a, pi_A(instance, utility)))
    comps.append((a, pi_B(instance, utility)))
    return MixturePolicy(tuple(comps), name="greedy-plus")


POLICY_NAMES = ("fixed:<ids>", "random", "pi-a", "pi-b", "pi-b-restricted", "greedy-plus")


def make_policy(spec: str, instance: Instance, utility: UtilityModel, rho: float | None = None, seed: int | None = None):
    """Build a policy from its CLI name."""
    if spec.startswith("fixed:"):
        body = spec[len("fixed:"):]
        try:
            seq = [int(x) for x in body.split(",")] if body else []
        except ValueError:
            raise InvalidInputError(f"bad fixed sequence {body!r}") from None
        for i in seq:
            if not 0 <= i < instance.m:
                raise InvalidInputError(f"fixed sequence: unknown item id {i}")
        return fixed_sequence_policy(seq)
    if spec == "random":
        if seed is None:
            raise InvalidInputError("policy 'random' needs --seed")
        return random_policy(seed, instance.m)
    if spec == "pi-a":
        return pi_A(instance, utility)
    if spec == "pi-b":
        return pi_B(instance, utility)
    if spec == "pi-b-restricted":
        return pi_B_restricted(instance, utility, rho_star() if rho is None else rho)
    if spec == "greedy-plus":
        return greedy_plus(instance, utility, rho)
    raise InvalidInputError(f"unknown policy {spec!r}; expected one of {', '.join(POLICY_NAMES)}")
