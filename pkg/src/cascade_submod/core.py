"""Items, realizations, partial realizations and priors.

States are dense integer ids ``0..n_states-1``. A full realization is a
tuple of state ids indexed by item id. Two prior families are supported:

* :class:`TabularPrior` -- an explicit list of weighted realizations
  (correlated states, e.g. a hypothesis table). This is the canonical form.
* :class:`ProductPrior` -- independent per-item categorical distributions.
  It is expanded to tabular form on demand, up to :data:`MAX_EXPAND_ITEMS`.
"""

from __future__ import annotations

import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .errors import InvalidInputError, NullConditioningError, ResourceLimitError

PROB_TOL = 1e-9
MAX_EXPAND_ITEMS = 12

Realization = Sequence[int]


@dataclass(frozen=True)
class Item:
    id: int
    delta: float
    group: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidInputError(f"item {self.id}: delta {self.delta!r} not in [0, 1]")


@dataclass(frozen=True)
class PartialRealization:
    """Ordered observations ``((item, state), ...)`` made so far.

    Equality is on the ordered tuple; :attr:`key` is the canonical
    (order-free) encoding used for memoization.
    """

    observations: tuple[tuple[int, int], ...] = ()
    key: tuple[tuple[int, int], ...] = field(init=False, repr=False, compare=False)
    dom: frozenset[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obs = tuple((int(i), int(s)) for i, s in self.observations)
        dom = frozenset(i for i, _ in obs)
        if len(dom) != len(obs):
            raise InvalidInputError(f"duplicate item in partial realization {obs}")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "key", tuple(sorted(obs)))
        object.__setattr__(self, "dom", dom)

    def __len__(self):
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def extend(self, item: int, state: int) -> PartialRealization:
        return PartialRealization(self.observations + ((item, state),))

    def items(self) -> list[int]:
        return [i for i, _ in self.observations]

    def as_dict(self) -> dict[int, int]:
        return dict(self.observations)


EMPTY = PartialRealization()


def as_partial(psi: PartialRealization | Iterable[tuple[int, int]]) -> PartialRealization:
    if isinstance(psi, PartialRealization):
        return psi
    return PartialRealization(tuple(psi))


def _check_ids(psi: PartialRealization, n_items: int, n_states: int | None = None):
    for i, s in psi.observations:
        if not 0 <= i < n_items:
            raise InvalidInputError(f"unknown item id {i}")
        if s < 0 or (n_states is not None and s >= n_states):
            raise InvalidInputError(f"invalid state id {s} for item {i}")


def is_consistent(phi: Realization, psi) -> bool:
    """True iff ``phi`` agrees with ``psi`` on every observed item."""
    psi = as_partial(psi)
    _check_ids(psi, len(phi))
    return all(int(phi[i]) == s for i, s in psi.observations)


def is_subrealization(psi, psi2) -> bool:
    """True iff ``psi ⊆ psi2`` (domain containment plus agreement)."""
    psi, psi2 = as_partial(psi), as_partial(psi2)
    for obs in (psi, psi2):
        for i, s in obs.observations:
            if i < 0 or s < 0:
                raise InvalidInputError(f"invalid observation ({i}, {s})")
    other = psi2.as_dict()
    return all(other.get(i) == s for i, s in psi.observations)


# --------------------------------------------------------------------------
# priors
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TabularPrior:
    """Weighted list of full realizations; ``realizations[j]`` has weight ``weights[j]``."""

    weights: np.ndarray
    realizations: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        r = np.asarray(self.realizations, dtype=np.int64)
        if w.ndim != 1 or r.ndim != 2 or r.shape[0] != w.shape[0]:
            raise InvalidInputError("tabular prior: weights/realizations shape mismatch")
        if w.size == 0:
            raise InvalidInputError("tabular prior: no entries")
        if not np.all(w > 0):
            raise InvalidInputError("tabular prior: weights must be > 0")
        if abs(w.sum() - 1.0) > PROB_TOL:
            raise InvalidInputError(f"tabular prior: weights sum to {w.sum()!r}, not 1")
        if np.any(r < 0):
            raise InvalidInputError("tabular prior: negative state id")
        w.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "realizations", r)

    @property
    def n_items(self) -> int:
        return self.realizations.shape[1]

    def __len__(self):
        return self.weights.shape[0]

    def tabular(self) -> TabularPrior:
        return self

    def mask(self, psi: PartialRealization) -> np.ndarray:
        m = np.ones(len(self), dtype=bool)
        for i, s in psi.observations:
            m &= self.realizations[:, i] == s
        return m

    def entries(self) -> list[tuple[float, tuple[int, ...]]]:
        return [(float(p), tuple(int(x) for x in row)) for p, row in zip(self.weights, self.realizations)]


@dataclass(frozen=True, eq=False)
class ProductPrior:
    """Independent items; ``dists[i, s] = P[Φ_i = s]``."""

    dists: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dists, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] == 0:
            raise InvalidInputError("product prior: dists must be a non-empty 2-D table")
        if np.any(d < 0):
            raise InvalidInputError("product prior: negative probability")
        sums = d.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise InvalidInputError(f"product prior: dists[{bad[0]}] sums to {sums[bad[0]]!r}")
        d.setflags(write=False)
        object.__setattr__(self, "dists", d)

    @property
    def n_items(self) -> int:
        return self.dists.shape[0]

    def clamp(self, psi: PartialRealization) -> ProductPrior:
        """Conditional product prior: observed items become point masses."""
        d = self.dists.copy()
        for i, s in psi.observations:
            if d[i, s] <= 0:
                raise NullConditioningError(f"P[Φ_{i} = {s}] = 0")
            d[i] = 0.0
            d[i, s] = 1.0
        return ProductPrior(d)

    def tabular(self, max_items: int = MAX_EXPAND_ITEMS) -> TabularPrior:
        m, k = self.dists.shape
        if m > max_items:
            raise ResourceLimitError(f"product prior over {m} items exceeds expansion cap of {max_items}")
        support = [np.flatnonzero(self.dists[i] > 0) for i in range(m)]
        rows = np.array(list(itertools.product(*support)), dtype=np.int64).reshape(-1, m)
        w = np.prod(self.dists[np.arange(m), rows], axis=1)
        return TabularPrior(w / w.sum(), rows)

    def probability(self, psi: PartialRealization) -> float:
        return float(np.prod([self.dists[i, s] for i, s in psi.observations]))


Prior = Union[TabularPrior, ProductPrior]


def prob_of_observation(prior: Prior, psi) -> float:
    """P[Φ ∼ psi]: prior mass of realizations consistent with ``psi``."""
    psi = as_partial(psi)
    _check_ids(psi, prior.n_items)
    if isinstance(prior, ProductPrior):
        if any(s >= prior.dists.shape[1] for _, s in psi.observations):
            return 0.0
        return prior.probability(psi)
    return float(prior.weights[prior.mask(psi)].sum())


def posterior(prior: Prior, psi) -> TabularPrior:
    """p(φ | psi) as a tabular prior; ``psi = []`` returns the prior unchanged."""
    psi = as_partial(psi)
    _check_ids(psi, prior.n_items)
    if isinstance(prior, ProductPrior):
        if prob_of_observation(prior, psi) <= 0:
            raise NullConditioningError(f"P[Φ ∼ {psi.observations}] = 0")
        return prior.clamp(psi).tabular()
    if len(psi) == 0:
        return prior
    m = prior.mask(psi)
    w = prior.weights[m]
    total = w.sum()
    if total <= 0:
        raise NullConditioningError(f"P[Φ ∼ {psi.observations}] = 0")
    return TabularPrior(w / total, prior.realizations[m])


# --------------------------------------------------------------------------
# instance
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Instance:
    items: tuple[Item, ...]
    n_states: int
    prior: Prior
    utility_spec: dict | None = None

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise InvalidInputError("instance has no items")
        for k, it in enumerate(items):
            if it.id != k:
                raise InvalidInputError(f"items[{k}].id: expected {k}, got {it.id} (ids must be contiguous from 0)")
        if self.n_states < 1:
            raise InvalidInputError("states must be >= 1")
        if self.prior.n_items != len(items):
            raise InvalidInputError(f"prior covers {self.prior.n_items} items, instance has {len(items)}")
        if isinstance(self.prior, TabularPrior):
            if self.prior.realizations.max() >= self.n_states:
                raise InvalidInputError("tabular prior uses a state id >= states")
        elif self.prior.dists.shape[1] > self.n_states:
            raise InvalidInputError("product prior has more columns than states")

    @property
    def m(self) -> int:
        return len(self.items)

    @cached_property
    def deltas(self) -> np.ndarray:
        d = np.array([it.delta for it in self.items], dtype=np.float64)
        d.setflags(write=False)
        return d

    @cached_property
    def groups(self) -> tuple[int | None, ...]:
        return tuple(it.group for it in self.items)

    @cached_property
    def tabular(self) -> TabularPrior:
        return self.prior.tabular()

    def with_deltas(self, deltas: Sequence[float]) -> Instance:
        items = tuple(Item(it.id, float(d), it.group) for it, d in zip(self.items, deltas))
        return Instance(items, self.n_states, self.prior, self.utility_spec)

    def validate_partial(self, psi) -> PartialRealization:
        psi = as_partial(psi)
        _check_ids(psi, self.m, self.n_states)
        return psi


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise InvalidInputError(f"{path}: {msg}")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def instance_from_dict(doc: Any) -> Instance:
    """Validate and build an :class:`Instance` from its JSON document."""
    _require(isinstance(doc, dict), "$", "instance must be a JSON object")
    k = doc.get("states")
    _require(isinstance(k, int) and not isinstance(k, bool) and k >= 1, "states", "must be an integer >= 1")
    raw_items = doc.get("items")
    _require(isinstance(raw_items, list) and raw_items, "items", "must be a non-empty list")
    items = []
    for n, it in enumerate(raw_items):
        p = f"items[{n}]"
        _require(isinstance(it, dict), p, "must be an object")
        _require(it.get("id") == n and isinstance(it.get("id"), int), f"{p}.id", f"expected {n} (ids contiguous from 0)")
        d = it.get("delta")
        _require(_is_number(d) and 0.0 <= d <= 1.0, f"{p}.delta", "must be a number in [0, 1]")
        g = it.get("group")
        _require(g is None or (isinstance(g, int) and not isinstance(g, bool)), f"{p}.group", "must be an integer")
        items.append(Item(n, float(d), g))
    m = len(items)

    pr = doc.get("prior")
    _require(isinstance(pr, dict), "prior", "must be an object")
    kind = pr.get("type")
    if kind == "tabular":
        entries = pr.get("entries")
        _require(isinstance(entries, list) and entries, "prior.entries", "must be a non-empty list")
        weights, rows = [], []
        for n, e in enumerate(entries):
            p = f"prior.entries[{n}]"
            _require(isinstance(e, dict), p, "must be an object")
            w = e.get("p")
            _require(_is_number(w) and w > 0, f"{p}.p", "weight must be a number > 0")
            phi = e.get("phi")
            _require(isinstance(phi, list) and len(phi) == m, f"{p}.phi", f"must list a state for each of the {m} items")
            for j, s in enumerate(phi):
                _require(isinstance(s, int) and not isinstance(s, bool) and 0 <= s < k, f"{p}.phi[{j}]", f"state must be an integer in [0, {k})")
            weights.append(float(w))
            rows.append(phi)
        _require(abs(math.fsum(weights) - 1.0) <= PROB_TOL, "prior.entries", f"weights sum to {math.fsum(weights)!r}, not 1")
        prior: Prior = TabularPrior(np.array(weights), np.array(rows, dtype=np.int64))
    elif kind == "product":
        dists = pr.get("dists")
        _require(isinstance(dists, list) and len(dists) == m, "prior.dists", f"must list one distribution per item ({m})")
        for n, row in enumerate(dists):
            p = f"prior.dists[{n}]"
            _require(isinstance(row, list) and 1 <= len(row) <= k, p, f"must be a list of at most {k} probabilities")
            _require(all(_is_number(x) and x >= 0 for x in row), p, "probabilities must be numbers >= 0")
            _require(abs(math.fsum(row) - 1.0) <= PROB_TOL, p, f"sums to {math.fsum(row)!r}, not 1")
        table = np.zeros((m, k))
        for n, row in enumerate(dists):
            table[n, : len(row)] = row
        prior = ProductPrior(table)
    else:
        raise InvalidInputError(f"prior.type: expected 'tabular' or 'product', got {kind!r}")

    util = doc.get("utility")
    _require(util is None or isinstance(util, dict), "utility", "must be an object")
    return Instance(tuple(items), k, prior, util)


def instance_to_dict(inst: Instance) -> dict:
    items = []
    for it in inst.items:
        d: dict[str, Any] = {"id": it.id, "delta": it.delta}
        if it.group is not None:
            d["group"] = it.group
        items.append(d)
    if isinstance(inst.prior, TabularPrior):
        prior = {"type": "tabular", "entries": [{"p": p, "phi": list(phi)} for p, phi in inst.prior.entries()]}
    else:
        prior = {"type": "product", "dists": inst.prior.dists.tolist()}
    doc: dict[str, Any] = {"states": inst.n_states, "items": items, "prior": prior}
    if inst.utility_spec is not None:
        doc["utility"] = inst.utility_spec
    return doc


def load_instance(path: str | Path) -> Instance:
    """Read an instance from a JSON file, or from stdin when ``path == '-'``."""
    try:
        if str(path) == "-":
            doc = json.load(sys.stdin)
        else:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
    except OSError as exc:
        raise InvalidInputError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return instance_from_dict(doc)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1)
