"""Exception hierarchy shared by every module."""


class CascadeError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class InvalidInputError(CascadeError, ValueError):
    """Malformed instance, unknown item id, out-of-range parameter."""


class NullConditioningError(CascadeError, ValueError):
    """Conditioning on a partial realization of probability zero."""


class ResourceLimitError(CascadeError):
    """Instance too large for an exact / brute-force routine."""


class ContractViolationError(CascadeError):
    """A policy broke its contract, e.g. reselected an observed item."""
