"""Brute-force optimal adaptive policies on small instances.

Dynamic programming over partial realizations. With death-crediting
variants the value-to-go after observing ψ is

    V(ψ) = max(0, max_{i∈A(ψ)} Σ_s P[Φ_i=s | ψ]·[(1−δ_i)·h(ψ+) + δ_i·V(ψ+)])

with ``ψ+ = ψ ∪ {(i, s)}``. The no-death budgeted variant uses

    V̄(ψ) = max(h(ψ), max_{i∈A(ψ)} Σ_s P[Φ_i=s | ψ]·V̄(ψ+)).

The admissible set ``A(ψ)`` depends only on ``dom ψ``: all items
(unconstrained), items reachable with probability ``≥ ρ`` (ρ-reachable),
or items keeping the whole selected set's survival ``≥ ρ`` (strongly
ρ-reachable / budgeted). Reachability checks run in log space on virtual
costs with a small slack toward admitting.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable

from .core import Instance, PartialRealization, TabularPrior
from .errors import InvalidInputError, ResourceLimitError
from .policies import Policy
from .sequences import virtual_costs
from .utility import ConditionalUtility, UtilityModel

LOG_SLACK = 1e-12


class Variant(str, enum.Enum):
    UNCONSTRAINED = "none"
    RHO_REACHABLE = "rho"
    STRONGLY_RHO_REACHABLE = "strong-rho"
    BUDGET_NODEATH = "budget-nodeath"


@dataclass(frozen=True)
class OracleConfig:
    variant: Variant = Variant.UNCONSTRAINED
    rho: float = 0.0
    max_items: int = 6
    max_states: int = 3
    max_entries: int = 12

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidInputError(f"rho={self.rho!r} not in [0, 1]")

    def check_limits(self, instance: Instance):
        problems = []
        if instance.m > self.max_items:
            problems.append(f"items {instance.m} > {self.max_items}")
        if instance.n_states > self.max_states:
            problems.append(f"states {instance.n_states} > {self.max_states}")
        if isinstance(instance.prior, TabularPrior) and len(instance.prior) > self.max_entries:
            problems.append(f"tabular entries {len(instance.prior)} > {self.max_entries}")
        if problems:
            raise ResourceLimitError("oracle limits exceeded: " + "; ".join(problems))


@dataclass
class OptimalPolicyTable:
    """Canonical ψ → (optimal value-to-go, best next item or ``None`` = stop)."""

    variant: Variant
    rho: float
    entries: dict[tuple, tuple[float, int | None]] = field(default_factory=dict)

    def policy(self) -> TablePolicy:
        return TablePolicy(self)


class TablePolicy(Policy):
    """Deterministic policy read off an :class:`OptimalPolicyTable`."""

    def __init__(self, table: OptimalPolicyTable):
        self.table = table
        self.name = f"opt[{table.variant.value}]"

    def next_item(self, psi):
        entry = self.table.entries.get(psi.key)
        return None if entry is None else entry[1]


def _budget(rho: float) -> float:
    return math.inf if rho == 0.0 else -math.log(rho)


class _DP:
    def __init__(self, cond: ConditionalUtility, deltas, variant: Variant, rho: float,
                 root: PartialRealization, pool: Iterable[int]):
        self.cond = cond
        self.deltas = [float(d) for d in deltas]
        self.costs = list(virtual_costs(self.deltas))
        self.variant = variant
        self.budget = _budget(rho)
        self.root_dom = root.dom
        self.pool = sorted(set(pool))
        self.table = OptimalPolicyTable(variant, rho)
        self.nodeath = variant is Variant.BUDGET_NODEATH

    def _admissible(self, spent: float, i: int) -> bool:
        v = self.variant
        if v is Variant.UNCONSTRAINED or math.isinf(self.budget):
            return True
        if v is Variant.RHO_REACHABLE:
            return spent <= self.budget + LOG_SLACK
        return spent + self.costs[i] <= self.budget + LOG_SLACK

    def value(self, psi: PartialRealization) -> float:
        entries = self.table.entries
        hit = entries.get(psi.key)
        if hit is not None:
            return hit[0]
        dom = psi.dom
        spent = math.fsum(self.costs[j] for j in dom - self.root_dom)
        best = self.cond.h(psi) if self.nodeath else 0.0
        best_item = None
        for i in self.pool:
            if i in dom or not self._admissible(spent, i):
                continue
            d = self.deltas[i]
            q = 0.0
            for s, p in enumerate(self.cond.state_probs(i, psi)):
                if p <= 0.0:
                    continue
                child = psi.extend(i, s)
                if self.nodeath:
                    q += p * self.value(child)
                else:
                    q += p * ((1.0 - d) * self.cond.h(child) + d * self.value(child))
            if q > best:
                best, best_item = q, i
        entries[psi.key] = (float(best), best_item)
        return best


def solve(instance: Instance, utility: UtilityModel, config: OracleConfig = OracleConfig(),
          cond: ConditionalUtility | None = None) -> tuple[float, OptimalPolicyTable]:
    """Optimal value and policy table for ``config.variant``."""
    config.check_limits(instance)
    cond = cond or ConditionalUtility(instance, utility)
    dp = _DP(cond, instance.deltas, config.variant, config.rho, PartialRealization(), range(instance.m))
    v = dp.value(PartialRealization())
    return float(v), dp.table


def solve_restricted(cond: ConditionalUtility, deltas, root: PartialRealization, pool: Iterable[int]) -> float:
    """``max_{π∈Ω(pool)}`` of the death-credited objective that first takes ``dom root``.

    Utility at each death point is ``f(S^(k) ∪ dom root, Φ)`` under the
    posterior at ``root``; an empty policy scores 0.
    """
    dp = _DP(cond, deltas, Variant.UNCONSTRAINED, 0.0, root, pool)
    return float(dp.value(root))
