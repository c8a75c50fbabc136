"""
Exception types raised by the curve-fitting library.
"""

from __future__ import annotations


class SpreadModelError(ValueError):
    """Base class for all library errors."""


class DomainError(SpreadModelError):
    pass


class RejectedInstrumentError(SpreadModelError):
    """Bond is not vanilla (callable, convertible, variable rate or subordinated)."""


class MaturedInstrumentError(SpreadModelError):
    pass


class EmptyPanelError(SpreadModelError):
    pass


class DuplicateObservationError(SpreadModelError):
    pass


class RankDeficiencyError(SpreadModelError):
    """Normal equations are singular or too ill-conditioned to solve without a ridge."""

    def __init__(self, message: str, rank: int, columns: int, condition: float) -> None:
        super().__init__(message)
        self.rank = rank
        self.columns = columns
        self.condition = condition


class NegativeScaleError(SpreadModelError):
    pass


class UndefinedVarianceError(SpreadModelError):
    pass


class OrderingError(SpreadModelError):
    pass


class DataIntegrityError(SpreadModelError):
    """Strict-mode ingest failure."""


class TrackFormatError(SpreadModelError):
    pass
