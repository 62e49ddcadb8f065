"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1,
numerical failures exit 2, verification-suite failures exit 3.
"""


class MetariskError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MetariskError):
    """Input shapes are empty, mismatched, or otherwise unusable."""


class NotSymmetricError(MetariskError):
    """A matrix required to be symmetric deviates beyond tolerance."""


class SingularMatrixError(MetariskError):
    """A factorization or inversion failed.

    ``pivot`` holds the 1-based index of the failing leading minor when the
    failure came out of a Cholesky factorization, else ``None``.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class IllConditionedError(MetariskError):
    """A solve exceeded the configured condition-number limit."""


class NoSourceTasksError(MetariskError):
    """An operation requiring at least one source task got none."""


class DomainError(MetariskError):
    """A bound calculator received arguments outside its hypotheses."""


class ResourceBudgetError(MetariskError):
    """An exact enumeration would exceed its configured outcome budget."""


class ValidationError(MetariskError):
    """A config file or serialized input failed validation."""
