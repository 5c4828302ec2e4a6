"""Pool-based active learning benchmarks with version-space reduction.

Hypotheses get i.i.d. uniform weights normalized to 1; each hypothesis
labels each point uniformly from that point's label set; each point's
continuation probability is uniform on ``[delta_low, delta_high)``.
Reduction is reported as ``100 × mean credited utility``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import Instance, Item, TabularPrior
from .errors import InvalidInputError
from .evaluation import SimulationResult, simulate
from .policies import make_policy
from .utility import VersionSpaceUtility

MIXED_GROUPS = ((40, 2), (5, 3), (5, 4))


@dataclass(frozen=True)
class ExperimentConfig:
    hypotheses: int = 1000
    groups: tuple[tuple[int, int], ...] = ((50, 2),)
    delta_low: float = 0.0
    delta_high: float = 1.0
    rounds: int = 300
    seed: int = 0
    policies: tuple[str, ...] = ("greedy-plus", "random")
    rho: float | None = None
    replicates: int = 1
    threads: int = 1
    credit_survivors: bool = False

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple((int(n), int(k)) for n, k in self.groups))
        if not 0.0 <= self.delta_low < self.delta_high <= 1.0:
            raise InvalidInputError(f"need 0 <= delta_low < delta_high <= 1, got [{self.delta_low}, {self.delta_high})")
        if self.hypotheses < 2:
            raise InvalidInputError("hypotheses must be >= 2")
        if sum(n for n, _ in self.groups) < 1:
            raise InvalidInputError("at least one data point is required")
        if any(n < 0 or k < 1 for n, k in self.groups):
            raise InvalidInputError(f"bad group spec {self.groups}")
        if self.rounds < 1 or self.replicates < 1:
            raise InvalidInputError("rounds and replicates must be >= 1")


FIGURE_COLUMNS = ("sweep", "sweep_value", "policy", "reduction_pct", "stderr",
                  "mean_solution_size", "group1_pct", "group2_pct", "group3_pct")


@dataclass
class FigureRow:
    sweep: str
    sweep_value: float | int
    policy: str
    reduction_pct: float
    stderr: float
    mean_solution_size: float
    size_stderr: float = field(default=0.0, repr=False)
    group_pct: dict[int, float] = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {
            "sweep": self.sweep,
            "sweep_value": self.sweep_value,
            "policy": self.policy,
            "reduction_pct": self.reduction_pct,
            "stderr": self.stderr,
            "mean_solution_size": self.mean_solution_size,
        }
        for g in (1, 2, 3):
            rec[f"group{g}_pct"] = self.group_pct.get(g)
        return rec


def parse_groups(text: str) -> tuple[tuple[int, int], ...]:
    """``"40x2,5x3,5x4"`` → ``((40, 2), (5, 3), (5, 4))``."""
    out = []
    for part in text.split(","):
        try:
            n, k = part.lower().split("x")
            out.append((int(n), int(k)))
        except ValueError:
            raise InvalidInputError(f"bad group {part!r}; expected <points>x<labels>") from None
    return tuple(out)


def generate_instance(config: ExperimentConfig) -> Instance:
    """Random active-learning instance; deterministic in ``config.seed``.

    Points are numbered group by group; group tags are 1-based.
    """
    rng = np.random.default_rng(config.seed)
    H = config.hypotheses
    weights = 1.0 - rng.random(H)  # (0, 1]: zero weights are not allowed
    weights /= weights.sum()
    cols = []
    for g, (count, labels) in enumerate(config.groups, start=1):
        for _ in range(count):
            cols.append(rng.integers(0, labels, size=H))
    deltas = rng.uniform(config.delta_low, config.delta_high, size=len(cols))
    gid = [g for g, (count, _) in enumerate(config.groups, start=1) for _ in range(count)]
    items = tuple(Item(j, float(deltas[j]), gid[j]) for j in range(len(cols)))
    labels = np.stack(cols, axis=1)
    n_states = max(k for _, k in config.groups)
    return Instance(items, n_states, TabularPrior(weights, labels), {"type": "version-space"})


def micro_instance(seed: int, m: int | None = None, hypotheses: int | None = None,
                   delta_range: tuple[float, float] = (0.2, 0.9)) -> Instance:
    """Small binary version-space instance (m ∈ {3,4}, 4–6 hypotheses) for oracle checks."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 5)) if m is None else m
    H = int(rng.integers(4, 7)) if hypotheses is None else hypotheses
    w = 1.0 - rng.random(H)
    w /= w.sum()
    labels = rng.integers(0, 2, size=(H, m))
    deltas = rng.uniform(*delta_range, size=m)
    items = tuple(Item(j, float(deltas[j])) for j in range(m))
    return Instance(items, 2, TabularPrior(w, labels), {"type": "version-space"})


def replicate_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(r),)).generate_state(1, np.uint64)[0] >> 1)


def _run_point(config: ExperimentConfig, policy_name: str) -> list[SimulationResult]:
    results = []
    for r in range(config.replicates):
        cfg = replace(config, seed=replicate_seed(config.seed, r))
        inst = generate_instance(cfg)
        util = VersionSpaceUtility.from_instance(inst)
        pol = make_policy(policy_name, inst, util, rho=config.rho, seed=cfg.seed)
        results.append(simulate(pol, inst, util, config.rounds, cfg.seed, threads=config.threads,
                                credit_survivors=config.credit_survivors))
    return results


def _row(sweep: str, value: float, policy: str, results: list[SimulationResult]) -> FigureRow:
    values = np.concatenate([r.values for r in results])
    sizes = np.concatenate([r.sizes for r in results]).astype(np.float64)
    n = len(values)
    pct = {}
    for g in results[0].group_ids:
        pct[g] = float(np.mean([r.group_pct()[g] for r in results]))
    std = values.std(ddof=1) if n > 1 else 0.0
    size_std = sizes.std(ddof=1) if n > 1 else 0.0
    return FigureRow(
        sweep=sweep,
        sweep_value=value,
        policy=policy,
        reduction_pct=float(100.0 * values.sum() / n),
        stderr=float(100.0 * std / math.sqrt(n)),
        mean_solution_size=float(sizes.sum() / n),
        size_stderr=float(size_std / math.sqrt(n)),
        group_pct=pct,
    )


def run_label_sweep(config: ExperimentConfig, label_sizes: Sequence[int]) -> list[FigureRow]:
    """Homogeneous label-set size sweep (all points share one label count)."""
    if not label_sizes or any(k < 2 for k in label_sizes):
        raise InvalidInputError("label sizes must be a non-empty list of integers >= 2")
    points = sum(n for n, _ in config.groups)
    rows = []
    for k in label_sizes:
        cfg = replace(config, groups=((points, k),))
        for pol in config.policies:
            rows.append(_row("labels", int(k), pol, _run_point(cfg, pol)))
    return rows


def run_delta_sweep(config: ExperimentConfig, lower_ends: Sequence[float]) -> list[FigureRow]:
    """Continuation-probability lower-end sweep on the 40×2 / 5×3 / 5×4 mix."""
    _check_lower_ends(lower_ends)
    rows = []
    for lo in lower_ends:
        cfg = replace(config, groups=MIXED_GROUPS, delta_low=float(lo), delta_high=1.0)
        for pol in config.policies:
            rows.append(_row("delta_low", float(lo), pol, _run_point(cfg, pol)))
    return rows


def run_group_composition(config: ExperimentConfig, lower_ends: Sequence[float] = (0.0, 0.5, 0.8)) -> list[FigureRow]:
    """Per-group selection percentages of greedy-plus at each lower end."""
    return run_delta_sweep(replace(config, policies=("greedy-plus",)), lower_ends)


def _check_lower_ends(lower_ends):
    if not lower_ends or any(not 0.0 <= x < 1.0 for x in lower_ends):
        raise InvalidInputError("lower ends must be a non-empty list of values in [0, 1)")


def rows_to_csv(rows: Sequence[FigureRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIGURE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        rec = row.as_record()
        w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in rec.items()})
    return buf.getvalue()
