"""Shared exception types."""


class RelBeliefError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RelBeliefError):
    """An input violates a documented precondition (bad parameter, empty event,
    zero-probability conditioning, out-of-range interest value, and so on)."""


class DesignSearchError(DomainError):
    """No sample size on the search grid met the bias targets.

    Carries the full table of evaluated reports in ``reports`` so the caller
    can inspect how far each candidate fell short.
    """

    def __init__(self, message, reports):
        super().__init__(message)
        self.reports = reports
