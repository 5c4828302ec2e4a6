import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_submod.core import PartialRealization
from cascade_submod.errors import InvalidInputError
from cascade_submod.evaluation import adopted_sequence, exact_favg
from cascade_submod.experiments import micro_instance
from cascade_submod.policies import (
    BenefitCostPolicy,
    MixturePolicy,
    fixed_sequence_policy,
    greedy_plus,
    make_policy,
    pi_A,
    pi_B,
    pi_B_restricted,
    random_policy,
    ratio_argmax,
)
from cascade_submod.sequences import alpha, reachability, rho_star, survival
from cascade_submod.utility import VersionSpaceUtility

from conftest import GuardedPolicy, additive_product, vs_instance

P = PartialRealization


def test_fixed_sequence_examples():
    pol = fixed_sequence_policy([2, 0, 1])
    assert pol.next_item(P()) == 2
    assert pol.next_item(P(((2, 1),))) == 0
    assert fixed_sequence_policy([2]).next_item(P(((2, 0),))) is None
    with pytest.raises(InvalidInputError):
        fixed_sequence_policy([1, 1])


def test_random_policy_examples():
    assert random_policy(5, 1).next_item(P()) == 0
    assert random_policy(5, 2).next_item(P(((0, 0), (1, 1)))) is None
    a = random_policy(9, 6)
    psi = P(((3, 1), (0, 0)))
    assert a.next_item(psi) == a.next_item(psi) == random_policy(9, 6).next_item(P(((0, 0), (3, 1))))


def test_random_policy_roughly_uniform():
    counts = np.zeros(4)
    for seed in range(2000):
        counts[random_policy(seed, 4).next_item(P())] += 1
    assert np.all(np.abs(counts / 2000 - 0.25) < 0.04)


def _ab_instance():
    # a: Δ=0.5, δ=0.5;  b: Δ=0.3, δ=0.9
    return additive_product([[0.5, 0.5], [0.5, 0.5]], [[0.0, 1.0], [0.0, 0.6]], [0.5, 0.9])


def test_pi_b_ratio_example():
    inst, u = _ab_instance()
    pol = pi_B(inst, u)
    assert pol.next_item(P()) == 1
    assert adopted_sequence(pol, [1, 1]) == [1, 0]


def test_pi_b_zero_cost_dominates():
    inst, u = additive_product([[0.5, 0.5]] * 3, [[0.0, 1.0], [0.0, 0.1], [0.0, 5.0]], [0.5, 1.0, 0.999])
    assert pi_B(inst, u).next_item(P()) == 1


def test_pi_b_never_stops_with_zero_gains():
    inst, u = additive_product([[0.5, 0.5]] * 3, [[0.0, 0.0]] * 3, [0.5, 0.2, 0.9])
    assert adopted_sequence(pi_B(inst, u), [0, 0, 0]) == [0, 1, 2]


def test_ratio_order_tiers():
    gains = np.array([0.0, 0.2, 0.5, 0.3, 0.3])
    costs = np.array([0.0, 0.0, math.inf, 0.1, 0.1])
    # tier 0 (item 1) beats finite ratios; ties among 3 and 4 go to smaller id
    assert ratio_argmax(gains, costs, set()) == 1
    assert ratio_argmax(gains, costs, {1}) == 3
    assert ratio_argmax(gains, costs, {1, 3, 4}) == 2  # larger gain among ratio-0 items
    assert ratio_argmax(gains, costs, {0, 1, 2, 3, 4}) is None


def test_pi_a_first_pick_and_order():
    # x: Δ = 0.5; y: Δ = 0.32
    inst, u = vs_instance([0.5, 0.3, 0.2], [[0, 0], [1, 0], [1, 1]], [0.5, 0.5])
    assert u.marginals(inst, P())[1] == pytest.approx(0.32)
    assert pi_A(inst, u).next_item(P()) == 0
    inst3, u3 = additive_product([[0.5, 0.5]] * 3, [[0, 1.0], [0, 2.0], [0, 1.0]], [0.5] * 3)
    assert adopted_sequence(pi_A(inst3, u3), [1, 1, 1]) == [1, 0, 2]


def test_pi_a_tie_smallest_id():
    inst, u = additive_product([[0.5, 0.5]] * 3, [[0, 1.0], [0, 2.0], [0, 2.0]], [0.5] * 3)
    assert pi_A(inst, u).first == 1


def test_restricted_examples():
    inst, u = additive_product([[0.5, 0.5]] * 5, [[0, 1.0]] * 5, [0.5] * 5)
    assert len(adopted_sequence(pi_B_restricted(inst, u, 0.25), [1] * 5)) == 3
    assert len(adopted_sequence(pi_B_restricted(inst, u, 1.0), [1] * 5)) == 1
    with pytest.raises(InvalidInputError):
        pi_B_restricted(inst, u, 0.0)


def test_restricted_zero_cost_never_consumes_budget():
    inst, u = additive_product([[0.5, 0.5]] * 3, [[0, 1.0], [0, 1.0], [0, 1.0]], [1.0, 1.0, 1.0])
    assert adopted_sequence(pi_B_restricted(inst, u, 1.0), [1, 1, 1]) == [0, 1, 2]


def test_greedy_plus_weights():
    inst, u = _ab_instance()
    g = greedy_plus(inst, u)
    a = alpha(rho_star())
    assert g.weights == pytest.approx((1 - a, a))
    assert g.weights == pytest.approx((0.2172485, 0.7827515), abs=1e-7)
    g0 = greedy_plus(inst, u, rho=0.0)
    assert len(g0.components) == 1 and isinstance(g0.components[0][1], BenefitCostPolicy)
    for rho in np.linspace(0, 1, 11):
        assert sum(greedy_plus(inst, u, rho=float(rho)).weights) == pytest.approx(1.0, abs=1e-12)


def test_mixture_validation_and_pick():
    inst, u = _ab_instance()
    a, b = pi_A(inst, u), pi_B(inst, u)
    with pytest.raises(InvalidInputError):
        MixturePolicy(((0.5, a), (0.4, b)))
    mix = MixturePolicy(((0.25, a), (0.75, b)))
    assert mix.pick(0.1) is a and mix.pick(0.25) is b and mix.pick(0.999) is b


def test_make_policy():
    inst, u = _ab_instance()
    assert make_policy("fixed:1,0", inst, u).seq == (1, 0)
    assert make_policy("fixed:", inst, u).next_item(P()) is None
    assert make_policy("random", inst, u, seed=3).seed == 3
    assert make_policy("pi-b-restricted", inst, u).rho == rho_star()
    for bad in ("fixed:0,9", "fixed:a", "bogus"):
        with pytest.raises(InvalidInputError):
            make_policy(bad, inst, u)
    with pytest.raises(InvalidInputError):
        make_policy("random", inst, u)


# --- invariants over small instances ---------------------------------------------------


def _phis(inst):
    return inst.tabular.realizations


@pytest.mark.parametrize("seed", range(15))
def test_restricted_reachability_invariants(seed):
    inst = micro_instance(seed)
    u = VersionSpaceUtility.from_instance(inst)
    for rho in (0.1, 0.25, rho_star(), 0.5, 0.8):
        pol = GuardedPolicy(pi_B_restricted(inst, u, rho))
        full = GuardedPolicy(pi_B(inst, u))
        for phi in _phis(inst):
            seq = adopted_sequence(pol, phi)
            assert seq, "restricted policy always selects at least one item"
            for k in range(1, len(seq) + 1):
                assert reachability(seq, k, inst.deltas) >= rho - 1e-12
            assert survival(seq[:-1], inst.deltas) >= rho - 1e-12
            # identical choices up to the point the restricted policy stops
            assert adopted_sequence(full, phi)[: len(seq)] == seq
        assert exact_favg(pi_B(inst, u), inst, u).value >= exact_favg(pi_B_restricted(inst, u, rho), inst, u).value - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["random", "pi-a", "pi-b", "pi-b-restricted"]))
def test_policies_never_reselect(seed, name):
    inst = micro_instance(seed)
    u = VersionSpaceUtility.from_instance(inst)
    pol = GuardedPolicy(make_policy(name, inst, u, seed=seed))
    for phi in _phis(inst):
        seq = adopted_sequence(pol, phi)
        assert len(set(seq)) == len(seq)


def test_deterministic_policies_depend_on_observation_set_only():
    inst = micro_instance(4, m=4)
    u = VersionSpaceUtility.from_instance(inst)
    for pol in (pi_A(inst, u), pi_B(inst, u), pi_B_restricted(inst, u, 0.3)):
        phi = inst.tabular.realizations[0]
        for order in itertools.permutations(range(3)):
            psi = P(tuple((i, int(phi[i])) for i in order))
            assert pol.next_item(psi) == type(pol).next_item(pol, P(tuple(sorted(psi.key))))
