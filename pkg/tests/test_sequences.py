import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_submod.errors import InvalidInputError
from cascade_submod.sequences import (
    ReachabilityKind,
    alpha,
    best_rho_on_grid,
    classify,
    guarantee,
    reachability,
    rho_star,
    survival,
    virtual_cost,
    virtual_costs,
)

D = (0.9, 0.8, 0.7)


def test_reachability_examples():
    assert reachability([0, 1, 2], 3, D) == pytest.approx(0.72)
    assert reachability([2, 0], 1, D) == 1.0
    assert reachability([0], 1, [0.0]) == 1.0


def test_reachability_range_and_duplicates():
    with pytest.raises(InvalidInputError):
        reachability([0, 1], 3, D)
    with pytest.raises(InvalidInputError):
        reachability([0, 1], 0, D)
    with pytest.raises(InvalidInputError):
        reachability([0, 0], 1, D)


def test_classify_maximal_example():
    c = classify([0, 1, 2], 0.7, D, all_items_product=0.504)
    assert c.rho_reachable and not c.strongly
    assert c.kind is ReachabilityKind.MAXIMAL_RHO_REACHABLE


def test_classify_trivial_cases():
    assert classify([], 1.0, D).strongly
    assert classify([0, 1, 2], 0.0, D).strongly
    assert classify([0, 1, 2], 0.0, D).kind is ReachabilityKind.STRONGLY_RHO_REACHABLE
    c = classify([0, 1, 2], 0.75, D)
    assert not c.rho_reachable and c.kind is ReachabilityKind.NONE


def test_classify_all_sequences_maximal_when_product_large():
    # Π_E δ ≥ ρ: every sequence is maximal
    c = classify([0, 1], 0.5, D, all_items_product=0.504)
    assert c.maximal


def test_strong_implies_reachable_exhaustive():
    rng = np.random.default_rng(11)
    for _ in range(20):
        deltas = rng.random(5)
        for r in range(6):
            for seq in itertools.permutations(range(5), r):
                for rho in np.linspace(0, 1, 11):
                    c = classify(list(seq), float(rho), deltas)
                    if c.strongly:
                        assert c.rho_reachable


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_reachability_nonincreasing_and_death_mass(deltas):
    seq = list(range(len(deltas)))
    reach = [reachability(seq, k, deltas) for k in range(1, len(seq) + 1)]
    assert all(a >= b for a, b in zip(reach, reach[1:]))
    mass = math.fsum((1 - deltas[i]) * reach[k] for k, i in enumerate(seq))
    assert mass == pytest.approx(1 - survival(seq, deltas), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=8))
def test_virtual_cost_additive(deltas):
    total = float(np.sum(virtual_costs(deltas)))
    assert total == pytest.approx(-math.log(math.prod(deltas)), abs=1e-9)


def test_virtual_cost_examples():
    assert virtual_cost(1.0) == 0.0
    assert virtual_cost(1 / math.e) == pytest.approx(1.0)
    assert virtual_cost(0.5) == pytest.approx(0.693147, abs=1e-6)
    assert virtual_cost(0.0) == math.inf
    with pytest.raises(InvalidInputError):
        virtual_cost(1.2)


def test_alpha_examples():
    assert alpha(0.0) == 1.0
    assert alpha(1.0) == pytest.approx(1 / (2 - 1 / math.e))
    assert alpha(1.0) == pytest.approx(0.612700, abs=1e-6)


def test_constants():
    r = rho_star()
    assert r == pytest.approx((math.sqrt(math.e * (2 * math.e - 1)) - math.e) / (math.e - 1), abs=1e-15)
    # the closed form is also the exact maximizer (√(1+a) − 1)/a, a = 1 − 1/e
    a = 1 - 1 / math.e
    assert r == pytest.approx((math.sqrt(1 + a) - 1) / a, abs=1e-12)
    assert r == pytest.approx(0.4390693, abs=1e-7)
    assert alpha(r) == pytest.approx(0.7827515, abs=1e-7)
    assert guarantee(r) == pytest.approx(0.1218614, abs=1e-7)
    assert guarantee(r) > 0.12


def test_guarantee_endpoints_and_grid():
    assert guarantee(0.0) == 0.0 and guarantee(1.0) == 0.0
    assert abs(best_rho_on_grid() - rho_star()) <= 5e-3


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0))
def test_guarantee_below_optimum(rho):
    assert guarantee(rho) <= guarantee(rho_star()) + 1e-15
    assert 1 / (2 - 1 / math.e) - 1e-12 <= alpha(rho) <= 1.0
