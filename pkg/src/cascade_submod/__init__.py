"""Adaptive selection of items under random early termination.

Exact and simulated evaluation of adaptive policies whose selection process
may stop after every item with a known probability, the greedy-plus mixture
policy with its constant-factor guarantee, brute-force optimal oracles and
definitional checkers for small instances, and a version-space active
learning benchmark.
"""

from .core import (
    EMPTY,
    Instance,
    Item,
    PartialRealization,
    ProductPrior,
    TabularPrior,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    posterior,
)
from .errors import (
    CascadeError,
    ContractViolationError,
    InvalidInputError,
    NullConditioningError,
    ResourceLimitError,
)
from .evaluation import exact_favg, exact_favg_nodeath, simulate
from .policies import (
    fixed_sequence_policy,
    greedy_plus,
    make_policy,
    pi_A,
    pi_B,
    pi_B_restricted,
    random_policy,
)
from .sequences import alpha, guarantee, rho_star
from .utility import AdditiveStateUtility, VersionSpaceUtility, h, marginal, utility_from_instance

__version__ = "0.1.0"

FIXTURES = ("two-coin", "single-item", "vs-small", "additive-product", "vs-groups")


def fixture_path(name: str):
    """Path of a shipped fixture instance by short name."""
    from importlib import resources

    return resources.files(__name__).joinpath("fixtures", f"{name}.json")


def load_fixture(name: str) -> Instance:
    if name not in FIXTURES:
        raise InvalidInputError(f"unknown fixture {name!r}; expected one of {', '.join(FIXTURES)}")
    return load_instance(str(fixture_path(name)))
