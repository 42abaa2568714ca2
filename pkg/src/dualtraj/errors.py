"""Shared exception types."""


class InvalidInput(ValueError):
    """Array shapes, values, or file contents are unusable."""


class UnknownSystem(KeyError):
    """Registry lookup failed."""


class InvalidConfig(ValueError):
    """A SolveConfig violates its bounds."""


class NonConvergence(RuntimeError):
    """An implicit step failed to reach tolerance."""


class NotCritical(RuntimeError):
    """Certification was requested for a pair that is not a critical point."""


class DivergenceError(RuntimeError):
    """The primal-dual iteration blew up.

    Carries the best report seen before the abort in ``report``.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MinStepReached(RuntimeError):
    """Adaptive integration underflowed the step size.

    Carries the output accumulated so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class Diverged(RuntimeError):
    """An explicit march overflowed."""
