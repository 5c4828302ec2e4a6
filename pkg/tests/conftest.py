import numpy as np
import pytest

from cascade_submod import FIXTURES, load_fixture, utility_from_instance
from cascade_submod.core import Instance, Item, ProductPrior, TabularPrior
from cascade_submod.policies import Policy
from cascade_submod.utility import AdditiveStateUtility, UtilityModel, VersionSpaceUtility


def vs_instance(weights, labels, deltas, n_states=None):
    labels = np.asarray(labels, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    items = tuple(Item(i, float(d)) for i, d in enumerate(deltas))
    k = n_states or int(labels.max()) + 1
    inst = Instance(items, max(k, 2), TabularPrior(w / w.sum(), labels), {"type": "version-space"})
    return inst, VersionSpaceUtility.from_instance(inst)


def additive_product(dists, weights, deltas):
    dists = np.asarray(dists, dtype=np.float64)
    items = tuple(Item(i, float(d)) for i, d in enumerate(deltas))
    inst = Instance(items, dists.shape[1], ProductPrior(dists), {"type": "additive", "weights": np.asarray(weights).tolist()})
    return inst, AdditiveStateUtility(weights)


class TableUtility(UtilityModel):
    """Utility given by a function of |S| only, for checker counterexamples."""

    def __init__(self, fn, name="table"):
        self.fn = fn
        self.name = name

    def value(self, S, phi):
        return float(self.fn(len(set(S))))


class GuardedPolicy(Policy):
    """Asserts every emitted item lies outside dom(psi)."""

    def __init__(self, inner):
        self.inner = inner
        self.name = inner.name

    def next_item(self, psi):
        i = self.inner.next_item(psi)
        assert i is None or i not in psi.dom
        return i


@pytest.fixture(params=FIXTURES)
def fixture_instance(request):
    inst = load_fixture(request.param)
    return request.param, inst, utility_from_instance(inst)


@pytest.fixture
def three_hyp():
    # h1: x->0, h2: x->1, h3: x->1 with masses 0.5, 0.3, 0.2
    return vs_instance([0.5, 0.3, 0.2], [[0], [1], [1]], [0.5])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
