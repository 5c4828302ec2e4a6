"""Reachability arithmetic, the ρ-reachable taxonomy, and algorithm constants."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

E = math.e


def _check_unit(name: str, x: float):
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError(f"{name}={x!r} not in [0, 1]")


def _check_sequence(seq: Sequence[int]):
    if len(set(seq)) != len(seq):
        raise InvalidInputError(f"sequence {list(seq)} has duplicate items")


def reachability(seq: Sequence[int], k: int, deltas) -> float:
    """Probability that the ``k``-th item (1-based) of ``seq`` is reached.

    Product of the continuation probabilities of the first ``k - 1`` items.
    """
    _check_sequence(seq)
    if not 1 <= k <= len(seq):
        raise InvalidInputError(f"k={k} out of range for a sequence of length {len(seq)}")
    return math.prod(float(deltas[i]) for i in seq[: k - 1])


def survival(seq: Sequence[int], deltas) -> float:
    """``Π_{i∈seq} δ_i`` (1 for the empty sequence)."""
    return math.prod(float(deltas[i]) for i in seq)


class ReachabilityKind(enum.Enum):
    STRONGLY_RHO_REACHABLE = "strongly-rho-reachable"
    MAXIMAL_RHO_REACHABLE = "maximal-rho-reachable"
    RHO_REACHABLE = "rho-reachable"
    NONE = "none"


@dataclass(frozen=True)
class ReachabilityClass:
    rho: float
    rho_reachable: bool
    strongly: bool
    maximal: bool

    @property
    def kind(self) -> ReachabilityKind:
        """Most specific label; strong takes precedence over maximal."""
        if self.strongly:
            return ReachabilityKind.STRONGLY_RHO_REACHABLE
        if self.maximal:
            return ReachabilityKind.MAXIMAL_RHO_REACHABLE
        if self.rho_reachable:
            return ReachabilityKind.RHO_REACHABLE
        return ReachabilityKind.NONE


def classify(seq: Sequence[int], rho: float, deltas, all_items_product: float | None = None) -> ReachabilityClass:
    """Place ``seq`` in the ρ-reachable taxonomy.

    ``all_items_product`` is ``Π_{i∈E} δ_i``; computed from ``deltas`` if omitted.
    When it is at least ``rho`` every sequence counts as maximal.
    """
    _check_unit("rho", rho)
    _check_sequence(seq)
    if all_items_product is None:
        all_items_product = math.prod(float(d) for d in deltas)
    reach_last = reachability(seq, len(seq), deltas) if seq else 1.0
    rho_reachable = reach_last >= rho
    strongly = survival(seq, deltas) >= rho
    if all_items_product >= rho:
        maximal = True
    else:
        maximal = rho_reachable and not strongly
    return ReachabilityClass(rho, rho_reachable, strongly, maximal)


def virtual_cost(delta: float) -> float:
    """``c(i) = −ln δ_i``; ``inf`` for ``δ = 0``."""
    _check_unit("delta", delta)
    if delta == 0.0:
        return math.inf
    return -math.log(delta)


def virtual_costs(deltas) -> np.ndarray:
    return np.array([virtual_cost(float(d)) for d in deltas])


def alpha(rho: float) -> float:
    """Probability that greedy-plus runs the benefit-to-cost candidate."""
    _check_unit("rho", rho)
    return 1.0 / (rho * (1.0 - 1.0 / E) + 1.0)


def rho_star() -> float:
    """Default reachability threshold, ``(√(e(2e−1)) − e)/(e − 1) ≈ 0.439069``."""
    return (math.sqrt(E * (2.0 * E - 1.0)) - E) / (E - 1.0)


def guarantee(rho: float) -> float:
    """Approximation factor ``(1−ρ)·ρ(1−1/e)·α(ρ)`` of greedy-plus at ``rho``."""
    return (1.0 - rho) * rho * (1.0 - 1.0 / E) * alpha(rho)


def best_rho_on_grid(step: float = 1e-3) -> float:
    """Grid maximizer of :func:`guarantee` (diagnostics only)."""
    grid = np.arange(0.0, 1.0 + step / 2, step)
    vals = np.array([guarantee(min(r, 1.0)) for r in grid])
    return float(grid[int(np.argmax(vals))])
