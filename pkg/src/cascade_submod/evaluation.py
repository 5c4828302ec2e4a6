"""Exact and Monte Carlo evaluation of policies.

The objective credits ``f(S^(k), φ)`` when the process dies right after the
``k``-th selected item, with weight ``(1 − δ_k)·Π_{j<k} δ_j``. A run that
survives its whole adopted sequence credits nothing, unless
``credit_survivors`` is set (a diagnostic, not the analysed objective).

Random streams: round ``r`` of a simulation seeded with ``seed`` uses
``PCG64(SeedSequence(seed, spawn_key=(r,)))`` and draws, in order,
``m + 2`` uniforms (realization pick, mixture coin, one continuation coin
per step), one 63-bit policy seed, and ``m`` uniforms for product-prior
states. Every round is therefore a pure function of ``(seed, r)``.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Instance, PartialRealization, ProductPrior
from .errors import ContractViolationError, InvalidInputError
from .policies import MixturePolicy, Policy
from .utility import UtilityModel


class Mode(str, enum.Enum):
    EXACT = "exact"
    EXACT_NODEATH = "nodeath"
    MONTE_CARLO = "mc"


@dataclass
class RealizationBreakdown:
    index: int
    weight: float
    sequence: tuple[int, ...]
    contributions: tuple[float, ...]  # per death point, already weighted by its death probability
    death_mass: float
    component: str | None = None  # mixture component the row belongs to
    component_weight: float | None = None


@dataclass
class EvalResult:
    value: float
    mode: Mode
    trials: int | None = None
    stderr: float | None = None
    breakdown: list[RealizationBreakdown] | None = None

    def to_dict(self) -> dict:
        d = {"value": self.value, "mode": self.mode.value, "trials": self.trials, "stderr": self.stderr}
        if self.breakdown is not None:
            d["breakdown"] = [
                {
                    "realization": b.index,
                    "weight": b.weight,
                    "sequence": list(b.sequence),
                    "contributions": list(b.contributions),
                    "death_mass": b.death_mass,
                    **({"component": b.component, "component_weight": b.component_weight} if b.component else {}),
                }
                for b in self.breakdown
            ]
        return d


def adopted_sequence(policy: Policy, phi) -> list[int]:
    """The full sequence ``policy`` would select under ``phi`` if it never died."""
    psi = PartialRealization()
    seq: list[int] = []
    n = len(phi)
    while len(seq) < n:
        i = policy.next_item(psi)
        if i is None:
            break
        if i in psi.dom:
            raise ContractViolationError(f"{policy.name} reselected item {i} at {psi.observations}")
        if not 0 <= i < n:
            raise ContractViolationError(f"{policy.name} returned unknown item {i}")
        seq.append(i)
        psi = psi.extend(i, int(phi[i]))
    return seq


def exact_favg(policy, instance: Instance, utility: UtilityModel, breakdown: bool = False) -> EvalResult:
    """Exact expected utility, enumerating realizations and death points."""
    if isinstance(policy, MixturePolicy):
        parts = [(w, exact_favg(p, instance, utility, breakdown)) for w, p in policy.components]
        value = math.fsum(w * r.value for w, r in parts)
        rows = None
        if breakdown:
            rows = [replace(b, component=p.name, component_weight=w)
                    for (w, r), (_, p) in zip(parts, policy.components) for b in r.breakdown]
        return EvalResult(value, Mode.EXACT, breakdown=rows)
    tab = instance.tabular
    deltas = instance.deltas
    total = 0.0
    rows = []
    for j, (p, phi) in enumerate(zip(tab.weights, tab.realizations)):
        seq = adopted_sequence(policy, phi)
        contrib = []
        reach = 1.0
        for k, i in enumerate(seq):
            w = (1.0 - deltas[i]) * reach
            contrib.append(w * utility.value(seq[: k + 1], phi) if w > 0 else 0.0)
            reach *= deltas[i]
        v = math.fsum(contrib)
        total += p * v
        if breakdown:
            rows.append(RealizationBreakdown(j, float(p), tuple(seq), tuple(contrib), 1.0 - reach))
    return EvalResult(float(total), Mode.EXACT, breakdown=rows if breakdown else None)


def exact_favg_nodeath(policy, instance: Instance, utility: UtilityModel) -> EvalResult:
    """Expected utility of the full adopted sequence (the process never dies)."""
    if isinstance(policy, MixturePolicy):
        value = math.fsum(w * exact_favg_nodeath(p, instance, utility).value for w, p in policy.components)
        return EvalResult(value, Mode.EXACT_NODEATH)
    tab = instance.tabular
    total = 0.0
    for p, phi in zip(tab.weights, tab.realizations):
        seq = adopted_sequence(policy, phi)
        total += p * (utility.value(seq, phi) if seq else 0.0)
    return EvalResult(float(total), Mode.EXACT_NODEATH)


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


@dataclass
class EpisodeTrace:
    round: int
    realization: tuple[int, ...]
    realization_index: int | None
    selected: tuple[int, ...]
    death_position: int | None  # index into ``selected`` of the item after which the process died
    credited: float
    groups: tuple[int | None, ...]

    @property
    def survived(self) -> bool:
        return self.death_position is None

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "realization_index": self.realization_index,
            "selected": list(self.selected),
            "death_position": self.death_position,
            "credited": self.credited,
            "groups": list(self.groups),
        }


@dataclass
class SimulationResult:
    result: EvalResult
    values: np.ndarray
    sizes: np.ndarray
    group_ids: tuple[int, ...]
    group_counts: np.ndarray  # rounds × groups, selected items per group
    traces: list[EpisodeTrace] | None = None
    group_sizes: dict[int, int] = field(default_factory=dict)

    @property
    def mean_solution_size(self) -> float:
        return float(self.sizes.sum() / len(self.sizes))

    def group_pct(self) -> dict[int, float]:
        """Mean over rounds of ``100 · selected-in-group / group size``."""
        out = {}
        for c, g in enumerate(self.group_ids):
            frac = self.group_counts[:, c] / self.group_sizes[g]
            out[g] = float(100.0 * frac.sum() / len(frac))
        return out


def episode_rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(round_index),))))


def _draw_realization(instance: Instance, u: float, rng) -> tuple[np.ndarray, int | None]:
    prior = instance.prior
    if isinstance(prior, ProductPrior):
        us = rng.random(instance.m)
        states = np.empty(instance.m, dtype=np.int64)
        for i in range(instance.m):
            states[i] = _inverse_cdf(prior.dists[i], us[i])
        return states, None
    j = _inverse_cdf(prior.weights, u)
    return prior.realizations[j], j


def _inverse_cdf(p: np.ndarray, u: float) -> int:
    cdf = np.cumsum(p)
    j = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    # rounding at the top end: fall back to the last outcome with positive mass
    return j if j < len(p) else int(np.flatnonzero(p > 0)[-1])


def run_episode(policy, instance: Instance, utility: UtilityModel, seed: int, round_index: int, credit_survivors: bool = False) -> EpisodeTrace:
    m = instance.m
    rng = episode_rng(seed, round_index)
    coins = rng.random(m + 2)
    policy_seed = int(rng.integers(0, 2**63 - 1))
    phi, idx = _draw_realization(instance, coins[0], rng)
    if isinstance(policy, MixturePolicy):
        policy = policy.pick(coins[1])
    policy = policy.for_episode(policy_seed)

    deltas = instance.deltas
    psi = PartialRealization()
    selected: list[int] = []
    death = None
    for step in range(m):
        i = policy.next_item(psi)
        if i is None:
            break
        if i in psi.dom or not 0 <= i < m:
            raise ContractViolationError(f"{policy.name} returned invalid item {i} at {psi.observations}")
        selected.append(i)
        psi = psi.extend(i, int(phi[i]))
        if coins[2 + step] >= deltas[i]:
            death = step
            break
    if death is not None or credit_survivors:
        credited = utility.value(selected, phi) if selected else 0.0
    else:
        credited = 0.0
    groups = tuple(instance.items[i].group for i in selected)
    return EpisodeTrace(round_index, tuple(int(x) for x in phi), idx, tuple(selected), death, float(credited), groups)


def _run_chunk(args):
    policy, instance, utility, seed, start, stop, credit_survivors, keep = args
    return [_summarize(run_episode(policy, instance, utility, seed, r, credit_survivors), keep) for r in range(start, stop)]


def _summarize(trace: EpisodeTrace, keep: bool):
    return trace if keep else (trace.credited, len(trace.selected), trace.groups)


def simulate(
    policy,
    instance: Instance,
    utility: UtilityModel,
    rounds: int,
    seed: int,
    threads: int = 1,
    credit_survivors: bool = False,
    keep_traces: bool = False,
) -> SimulationResult:
    """Monte Carlo estimate of the expected utility over ``rounds`` episodes.

    Rounds are split into contiguous chunks across ``threads`` worker
    processes; results are reassembled in round order, so the output does
    not depend on the worker count.
    """
    if rounds < 1:
        raise InvalidInputError("rounds must be >= 1")
    threads = max(1, min(int(threads), rounds))
    if threads == 1:
        out = _run_chunk((policy, instance, utility, seed, 0, rounds, credit_survivors, keep_traces))
    else:
        bounds = np.linspace(0, rounds, threads + 1).astype(int)
        jobs = [(policy, instance, utility, seed, int(a), int(b), credit_survivors, keep_traces) for a, b in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            out = [x for part in ex.map(_run_chunk, jobs) for x in part]

    if keep_traces:
        traces = out
        summary = [(t.credited, len(t.selected), t.groups) for t in traces]
    else:
        traces, summary = None, out
    values = np.array([s[0] for s in summary], dtype=np.float64)
    sizes = np.array([s[1] for s in summary], dtype=np.int64)

    group_ids = tuple(sorted({g for g in instance.groups if g is not None}))
    group_sizes = {g: sum(1 for x in instance.groups if x == g) for g in group_ids}
    counts = np.zeros((rounds, len(group_ids)), dtype=np.int64)
    col = {g: c for c, g in enumerate(group_ids)}
    for r, s in enumerate(summary):
        for g in s[2]:
            if g is not None:
                counts[r, col[g]] += 1

    mean = float(values.sum() / rounds)
    stderr = float(values.std(ddof=1) / math.sqrt(rounds)) if rounds > 1 else 0.0
    res = EvalResult(mean, Mode.MONTE_CARLO, trials=rounds, stderr=stderr)
    return SimulationResult(res, values, sizes, group_ids, counts, traces, group_sizes)


def default_threads() -> int:
    return os.cpu_count() or 1
