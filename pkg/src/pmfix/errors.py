class PmfixError(Exception):
    """Base class for every error raised by pmfix."""


class DomainMismatchError(PmfixError, ValueError):
    pass


class NegativeInputError(PmfixError, ValueError):
    pass


class EmptySetError(PmfixError, ValueError):
    pass


class NonComparablePairError(PmfixError, ValueError):
    pass


class DegenerateBoundsError(PmfixError, ValueError):
    pass


class ConditionViolationError(PmfixError):
    """Raised when a problem fails its own admissibility checks."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
