"""Exception hierarchy shared across the package."""

from __future__ import annotations


class IvSmileError(Exception):
    """Base class for all errors raised by ivsmile."""


class EmptyFile(IvSmileError):
    pass


class MalformedRow(IvSmileError):
    """A CSV row has the wrong field count or an unparseable field."""


class InvariantViolation(IvSmileError, ValueError):
    """A value object failed one of its invariants."""


class AmbiguousPhase(IvSmileError):
    pass


class CollisionError(IvSmileError):
    """Two observations snapped onto the same grid node."""


class StepTooCoarse(IvSmileError):
    pass


class GridTooSmall(IvSmileError):
    pass


class GridTooNarrow(IvSmileError):
    pass


class SingularSystem(IvSmileError):
    pass


class DomainError(IvSmileError, ValueError):
    pass


class DegenerateDensity(IvSmileError):
    pass


class TooFewObservations(IvSmileError):
    pass


class OffGridOffset(IvSmileError):
    pass


class ZeroPrice(IvSmileError):
    pass


class MissingPhase(IvSmileError):
    pass


class UnknownMetric(IvSmileError, KeyError):
    pass


class NoArbitrageFreeFit(UserWarning):
    """λ reached its floor while the extracted density was still negative.

    Issued as a warning: the floor fit is still returned so that reports can
    show it.
    """


class ExpiredBeforeExit(UserWarning):
    """The option contract expired before the exit snapshot; intrinsic values used."""


class ContractMismatch(UserWarning):
    """Exit expiry does not equal entry expiry minus elapsed calendar days."""
