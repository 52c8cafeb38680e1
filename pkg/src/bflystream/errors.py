"""Exception types raised across the package."""


class BflyError(Exception):
    """Base class for all package errors."""


class ConfigError(BflyError, ValueError):
    pass


class EmptyStream(BflyError):
    pass


class StreamInvariantViolation(BflyError):
    """An insert of a live edge or a delete of an absent one.

    ``index`` is the 1-based arrival index of the first offending event.
    """

    def __init__(self, index, message=""):
        self.index = index
        super().__init__(message or f"stream invariant violated at index {index}")


class DegenerateStream(BflyError):
    pass


class CensusOverflow(BflyError):
    pass


class UndefinedMetric(BflyError, ValueError):
    pass


class EquivalenceViolation(BflyError):
    pass
