"""Exception types shared across the package.

Two broad families matter to callers (and to the CLI exit codes):
``InputError`` for rejected inputs and out-of-contract requests, and
``NumericalError`` for failures arising during computation.
"""


class LeafscopeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(LeafscopeError):
    """Invalid input: bad values, violated invariants, unsupported requests."""


class ValidationError(InputError):
    """An object failed its construction-time invariants."""


class DomainError(InputError):
    """An argument lies outside the mathematical domain of an operation."""


class RefusalError(InputError):
    """The request is out of the supported scale or scope (by contract)."""


class MarginError(InputError):
    """A point sits too close to a chart boundary for the required stencil."""


class UnsupportedCoverError(InputError):
    """No tabulated holonomy cover exists for the requested leaf."""


class NumericalError(LeafscopeError):
    """A computation failed or degenerated at runtime."""


class DegenerateMetricError(NumericalError):
    """A metric coefficient matrix is not positive definite."""


class BoundaryExitError(NumericalError):
    """A geodesic left the chart domain before the requested parameter.

    Carries the partial path integrated so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IntegrationFailureError(NumericalError):
    """Integration blew up (NaN/inf). Carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class ContinuationError(NumericalError):
    """A holonomy lift left the range in which it can be continued."""


class InjectivityError(NumericalError):
    """Requested radius exceeds the injectivity scale (geodesics cross)."""


class PartialSampleError(NumericalError):
    """A leaf ball could not be filled to the requested radius.

    ``achieved_radius`` reports how far the sample reaches.
    """

    def __init__(self, message, achieved_radius=None):
        super().__init__(message)
        self.achieved_radius = achieved_radius
