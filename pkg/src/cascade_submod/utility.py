"""Stochastic utilities ``f(S, φ)`` and their conditional expectations.

Conditional quantities:

* ``h(ψ)      = E[f(dom ψ, Φ) | Φ ∼ ψ]``
* ``Δ(i | ψ)  = E[f(dom ψ ∪ {i}, Φ) | Φ ∼ ψ] − h(ψ)``

The module-level :func:`h` / :func:`marginal` go through :func:`posterior`.
:class:`ConditionalUtility` computes the same quantities by masking the full
prior table and memoizes them; the oracle and checkers use it.
"""

from __future__ import annotations

from functools import cached_property
from typing import Iterable

import numpy as np

from .core import (
    EMPTY,
    Instance,
    PartialRealization,
    Realization,
    TabularPrior,
    posterior,
)
from .errors import InvalidInputError, NullConditioningError


class UtilityModel:
    """Abstract ``f: 2^E × O^E → R≥0``.

    Subclasses implement :meth:`value`; :meth:`values` is the batched form
    over the rows of a realization matrix and may be overridden for speed.
    """

    name = "utility"

    def value(self, S: Iterable[int], phi: Realization) -> float:
        raise NotImplementedError

    def values(self, S: Iterable[int], realizations: np.ndarray) -> np.ndarray:
        S = frozenset(S)
        return np.array([self.value(S, row) for row in realizations], dtype=np.float64)

    def marginals(self, instance: Instance, psi: PartialRealization) -> np.ndarray:
        """``Δ(i | psi)`` for every item (``nan`` for observed items)."""
        return ConditionalUtility(instance, self).marginals(psi)

    def to_spec(self) -> dict:
        raise NotImplementedError


class VersionSpaceUtility(UtilityModel):
    """Eliminated prior mass: ``f(S, φ) = 1 − Σ_h p(h)·[h agrees with φ on S]``.

    The hypotheses are the entries of the instance's tabular prior. The
    realized hypothesis is never eliminated, so ``f ≤ 1 − p(h*)``.
    Value depends on φ only through the states of items in ``S``.
    """

    name = "version-space"

    def __init__(self, weights: np.ndarray, labels: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)

    @classmethod
    def from_instance(cls, instance: Instance) -> VersionSpaceUtility:
        if not isinstance(instance.prior, TabularPrior):
            raise InvalidInputError("version-space utility needs a tabular prior (hypothesis table)")
        return cls(instance.prior.weights, instance.prior.realizations)

    @cached_property
    def _onehot(self) -> np.ndarray:
        k = int(self.labels.max()) + 1
        n, m = self.labels.shape
        return (self.labels[:, :, None] == np.arange(k)).reshape(n, m * k).astype(np.float64)

    def value(self, S, phi) -> float:
        S = sorted(S)
        if not S:
            return 0.0
        phi = np.asarray(phi)
        agree = np.all(self.labels[:, S] == phi[S], axis=1)
        return max(0.0, 1.0 - float(self.weights[agree].sum()))

    def values(self, S, realizations) -> np.ndarray:
        S = sorted(S)
        realizations = np.asarray(realizations)
        if not S:
            return np.zeros(realizations.shape[0])
        agree = np.all(self.labels[None, :, S] == realizations[:, None, S], axis=2)
        return np.maximum(0.0, 1.0 - agree.astype(np.float64) @ self.weights)

    def marginals(self, instance: Instance, psi: PartialRealization) -> np.ndarray:
        # Under the posterior every consistent hypothesis shares the same
        # version space, so with M = consistent mass and M_s the part of it
        # labelling item i as s:  Δ(i|ψ) = M − Σ_s M_s² / M.
        mask = np.ones(self.labels.shape[0], dtype=bool)
        for i, s in psi.observations:
            mask &= self.labels[:, i] == s
        wm = np.where(mask, self.weights, 0.0)
        total = wm.sum()
        if total <= 0:
            raise NullConditioningError(f"P[Φ ∼ {psi.observations}] = 0")
        m = self.labels.shape[1]
        masses = (wm @ self._onehot).reshape(m, -1)
        out = total - (masses * masses).sum(axis=1) / total
        out[list(psi.dom)] = np.nan
        return out

    def to_spec(self) -> dict:
        return {"type": "version-space"}


class AdditiveStateUtility(UtilityModel):
    """Modular utility ``f(S, φ) = Σ_{i∈S} w[i, φ_i]`` with ``w ≥ 0``."""

    name = "additive"

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2 or np.any(w < 0):
            raise InvalidInputError("additive utility: weights must be a non-negative 2-D table")
        self.weights = w

    def value(self, S, phi) -> float:
        return float(sum(self.weights[i, phi[i]] for i in S))

    def values(self, S, realizations) -> np.ndarray:
        S = sorted(S)
        realizations = np.asarray(realizations)
        if not S:
            return np.zeros(realizations.shape[0])
        return self.weights[S, realizations[:, S]].sum(axis=1)

    def to_spec(self) -> dict:
        return {"type": "additive", "weights": self.weights.tolist()}


def utility_from_instance(instance: Instance) -> UtilityModel:
    """Build the utility named by the instance's ``"utility"`` entry.

    Defaults to version-space reduction when the entry is absent.
    """
    spec = instance.utility_spec or {"type": "version-space"}
    kind = spec.get("type")
    if kind == "version-space":
        return VersionSpaceUtility.from_instance(instance)
    if kind == "additive":
        w = np.asarray(spec.get("weights"), dtype=np.float64)
        if w.shape != (instance.m, instance.n_states):
            raise InvalidInputError(f"utility.weights: expected shape ({instance.m}, {instance.n_states}), got {w.shape}")
        return AdditiveStateUtility(w)
    raise InvalidInputError(f"utility.type: unknown utility {kind!r}")


# --------------------------------------------------------------------------
# posterior route
# --------------------------------------------------------------------------


def h(utility: UtilityModel, instance: Instance, psi=EMPTY) -> float:
    """Conditional expected utility of ``dom(psi)``; 0 for the empty observation."""
    psi = instance.validate_partial(psi)
    post = posterior(instance.prior, psi)
    if len(psi) == 0:
        return 0.0
    return float(post.weights @ utility.values(psi.dom, post.realizations))


def marginal(utility: UtilityModel, instance: Instance, i: int, psi=EMPTY) -> float:
    """Expected marginal benefit ``Δ(i | psi)``."""
    psi = instance.validate_partial(psi)
    if not 0 <= i < instance.m:
        raise InvalidInputError(f"unknown item id {i}")
    if i in psi.dom:
        raise InvalidInputError(f"item {i} already observed")
    post = posterior(instance.prior, psi)
    with_i = float(post.weights @ utility.values(psi.dom | {i}, post.realizations))
    base = float(post.weights @ utility.values(psi.dom, post.realizations)) if len(psi) else 0.0
    return with_i - base


def expected_singletons(utility: UtilityModel, instance: Instance) -> np.ndarray:
    """``E[f({i}, Φ)]`` for each item."""
    tab = instance.tabular
    return np.array([float(tab.weights @ utility.values({i}, tab.realizations)) for i in range(instance.m)])


# --------------------------------------------------------------------------
# memoized direct-summation route
# --------------------------------------------------------------------------


class ConditionalUtility:
    """Memoized ``h``, ``Δ`` and state probabilities over the full prior table.

    Computes each quantity by direct summation over realizations consistent
    with ``ψ`` (no explicit posterior object), keyed on the canonical ψ.
    """

    def __init__(self, instance: Instance, utility: UtilityModel):
        self.instance = instance
        self.utility = utility
        self.table = instance.tabular
        self._mask: dict[tuple, np.ndarray] = {}
        self._h: dict[tuple, float] = {}
        self._mass: dict[tuple, float] = {}

    def mask(self, psi: PartialRealization) -> np.ndarray:
        key = psi.key
        m = self._mask.get(key)
        if m is None:
            if not key:
                m = np.ones(len(self.table), dtype=bool)
            else:
                parent = PartialRealization(key[:-1])
                i, s = key[-1]
                m = self.mask(parent) & (self.table.realizations[:, i] == s)
            self._mask[key] = m
        return m

    def prob(self, psi: PartialRealization) -> float:
        key = psi.key
        p = self._mass.get(key)
        if p is None:
            p = float(self.table.weights[self.mask(psi)].sum())
            self._mass[key] = p
        return p

    def _expect(self, S, psi: PartialRealization) -> float:
        m = self.mask(psi)
        w = self.table.weights[m]
        total = w.sum()
        if total <= 0:
            raise NullConditioningError(f"P[Φ ∼ {psi.observations}] = 0")
        if not S:
            return 0.0
        return float(w @ self.utility.values(S, self.table.realizations[m]) / total)

    def h(self, psi: PartialRealization) -> float:
        key = psi.key
        v = self._h.get(key)
        if v is None:
            v = self._expect(psi.dom, psi)
            self._h[key] = v
        return v

    def marginal(self, i: int, psi: PartialRealization) -> float:
        if i in psi.dom:
            raise InvalidInputError(f"item {i} already observed")
        return self._expect(psi.dom | {i}, psi) - self.h(psi)

    def marginals(self, psi: PartialRealization) -> np.ndarray:
        out = np.full(self.instance.m, np.nan)
        for i in range(self.instance.m):
            if i not in psi.dom:
                out[i] = self.marginal(i, psi)
        return out

    def state_probs(self, i: int, psi: PartialRealization) -> np.ndarray:
        """``P[Φ_i = s | ψ]`` for every state ``s``."""
        m = self.mask(psi)
        w = self.table.weights[m]
        total = w.sum()
        if total <= 0:
            raise NullConditioningError(f"P[Φ ∼ {psi.observations}] = 0")
        probs = np.bincount(self.table.realizations[m, i], weights=w, minlength=self.instance.n_states)
        return probs / total
