import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_submod import load_fixture, utility_from_instance
from cascade_submod.errors import ContractViolationError, InvalidInputError
from cascade_submod.evaluation import (
    Mode,
    adopted_sequence,
    exact_favg,
    exact_favg_nodeath,
    run_episode,
    simulate,
)
from cascade_submod.experiments import micro_instance
from cascade_submod.policies import Policy, fixed_sequence_policy, greedy_plus, make_policy, pi_A, pi_B
from cascade_submod.utility import AdditiveStateUtility, VersionSpaceUtility

from conftest import additive_product, vs_instance


class Stubborn(Policy):
    name = "stubborn"

    def next_item(self, psi):
        return 0


class StopNow(Policy):
    name = "stop"

    def next_item(self, psi):
        return None


@pytest.fixture
def two_coin():
    inst = load_fixture("two-coin")
    return inst, utility_from_instance(inst)


def test_two_coin_exact(two_coin):
    inst, u = two_coin
    res = exact_favg(fixed_sequence_policy([1, 2]), inst, u)
    assert res.value == 0.5 and res.mode is Mode.EXACT
    assert exact_favg_nodeath(fixed_sequence_policy([1, 2]), inst, u).value == 1.0


def test_empty_policy_and_zero_utility(two_coin):
    inst, u = two_coin
    assert exact_favg(StopNow(), inst, u).value == 0.0
    assert exact_favg_nodeath(StopNow(), inst, u).value == 0.0
    zero = AdditiveStateUtility(np.zeros((3, 2)))
    assert exact_favg(fixed_sequence_policy([1, 0, 2]), inst, zero).value == 0.0


def test_single_item_certain_death():
    inst = load_fixture("single-item")
    u = utility_from_instance(inst)
    assert exact_favg(fixed_sequence_policy([0]), inst, u).value == pytest.approx(0.25 * 1 + 0.75 * 3)


def test_adopted_sequence_examples(two_coin):
    inst, u = two_coin
    assert adopted_sequence(fixed_sequence_policy([1, 0]), [0, 1, 1]) == [1, 0]
    assert adopted_sequence(StopNow(), [0, 0, 0]) == []
    with pytest.raises(ContractViolationError):
        adopted_sequence(Stubborn(), [0, 0, 0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_death_mass_identity(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    deltas = rng.random(m)
    seq = list(rng.permutation(m)[: int(rng.integers(1, m + 1))])
    inst, u = additive_product([[0.5, 0.5]] * m, [[0.0, 1.0]] * m, deltas)
    res = exact_favg(fixed_sequence_policy(seq), inst, u, breakdown=True)
    surv = math.prod(deltas[i] for i in seq)
    for b in res.breakdown:
        weights = [(1 - deltas[i]) * math.prod(deltas[j] for j in seq[:k]) for k, i in enumerate(seq)]
        assert math.fsum(weights) == pytest.approx(1 - surv, abs=1e-12)
        assert b.death_mass == pytest.approx(1 - surv, abs=1e-12)


def test_mixture_is_weighted_combination():
    for seed in range(10):
        inst = micro_instance(seed)
        u = VersionSpaceUtility.from_instance(inst)
        g = greedy_plus(inst, u)
        parts = math.fsum(w * exact_favg(p, inst, u).value for w, p in g.components)
        assert exact_favg(g, inst, u).value == pytest.approx(parts, abs=1e-12)


def test_nodeath_dominates_for_monotone_utilities():
    for seed in range(10):
        inst = micro_instance(seed)
        u = VersionSpaceUtility.from_instance(inst)
        for name in ("pi-a", "pi-b", "greedy-plus", "random"):
            pol = make_policy(name, inst, u, seed=seed)
            assert exact_favg_nodeath(pol, inst, u).value >= exact_favg(pol, inst, u).value - 1e-12


def test_exact_fixed_sequences_by_brute_force():
    inst, u = vs_instance([0.4, 0.35, 0.25], [[0, 1, 0], [1, 1, 0], [1, 0, 1]], [0.3, 0.6, 0.9])
    R, W = inst.tabular.realizations, inst.tabular.weights
    for r in range(1, 4):
        for seq in itertools.permutations(range(3), r):
            expected = 0.0
            for w, phi in zip(W, R):
                reach = 1.0
                for k, i in enumerate(seq):
                    expected += w * reach * (1 - inst.deltas[i]) * u.value(seq[: k + 1], phi)
                    reach *= inst.deltas[i]
            assert exact_favg(fixed_sequence_policy(seq), inst, u).value == pytest.approx(expected, abs=1e-12)


def test_simulate_two_coin(two_coin):
    inst, u = two_coin
    sim = simulate(fixed_sequence_policy([1, 2]), inst, u, 20000, seed=11)
    assert abs(sim.result.value - 0.5) <= 3 * sim.result.stderr
    assert sim.result.trials == 20000
    assert sim.result.stderr == pytest.approx(sim.values.std(ddof=1) / math.sqrt(20000))


def test_simulate_single_round_deterministic(two_coin):
    inst, u = two_coin
    a = simulate(greedy_plus(inst, u), inst, u, 1, seed=5, keep_traces=True).traces[0]
    b = simulate(greedy_plus(inst, u), inst, u, 1, seed=5, keep_traces=True).traces[0]
    assert a == b


def test_simulate_no_death_credits_nothing():
    inst, u = additive_product([[0.5, 0.5]] * 4, [[0.0, 1.0]] * 4, [1.0] * 4)
    sim = simulate(pi_B(inst, u), inst, u, 200, seed=1, keep_traces=True)
    assert all(t.survived for t in sim.traces)
    assert sim.result.value == 0.0
    assert sim.mean_solution_size == 4.0
    diag = simulate(pi_B(inst, u), inst, u, 200, seed=1, credit_survivors=True)
    assert diag.result.value > 0.0


def test_simulate_thread_invariance():
    inst = load_fixture("vs-groups")
    u = utility_from_instance(inst)
    pol = make_policy("random", inst, u, seed=2)
    a = simulate(pol, inst, u, 301, seed=9, threads=1)
    b = simulate(pol, inst, u, 301, seed=9, threads=3)
    assert a.result.value == b.result.value and a.result.stderr == b.result.stderr
    assert np.array_equal(a.values, b.values) and np.array_equal(a.group_counts, b.group_counts)


def test_simulate_group_percentages():
    inst = load_fixture("vs-groups")
    u = utility_from_instance(inst)
    sim = simulate(pi_A(inst, u), inst, u, 500, seed=4)
    pct = sim.group_pct()
    assert set(pct) == {1, 2, 3}
    assert all(0.0 <= v <= 100.0 for v in pct.values())
    never = simulate(fixed_sequence_policy([0]), inst, u, 50, seed=4).group_pct()
    assert never[2] == 0.0 and never[3] == 0.0 and never[1] == 50.0


def test_product_prior_sampling_frequencies():
    inst, u = additive_product([[0.2, 0.8], [0.7, 0.3]], [[0.0, 1.0], [0.0, 1.0]], [0.0, 0.0])
    states = np.array([run_episode(pi_A(inst, u), inst, u, 3, r).realization for r in range(4000)])
    assert abs(states[:, 0].mean() - 0.8) < 0.03
    assert abs(states[:, 1].mean() - 0.3) < 0.03


def test_simulate_rejects_zero_rounds(two_coin):
    inst, u = two_coin
    with pytest.raises(InvalidInputError):
        simulate(pi_A(inst, u), inst, u, 0, seed=0)


def test_eval_result_to_dict(two_coin):
    inst, u = two_coin
    d = exact_favg(fixed_sequence_policy([1, 2]), inst, u, breakdown=True).to_dict()
    assert d["value"] == 0.5 and d["mode"] == "exact" and len(d["breakdown"]) == 4
