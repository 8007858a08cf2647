"""Exception hierarchy shared by all modules.

Every error derives from :class:`RiskModelError` (itself a ``ValueError``), so
callers can catch the whole family at once. The CLI maps
:class:`NoConvergence` to a numerical-failure exit code and everything else
to a data error.
"""


class RiskModelError(ValueError):
    """Base class for all data and argument errors raised by riskgame."""


class EmptyObservations(RiskModelError):
    pass


class CategoryOutOfRange(RiskModelError):
    pass


class InvalidBandwidth(RiskModelError):
    pass


class DegenerateSample(RiskModelError):
    pass


class InvalidCutoff(RiskModelError):
    pass


class ZeroMassBelowCutoff(RiskModelError):
    pass


class InvalidArgument(RiskModelError):
    pass


class DegenerateRange(RiskModelError):
    pass


class SupportMismatch(RiskModelError):
    pass


class InvalidWeights(RiskModelError):
    pass


class IncompleteGrid(RiskModelError):
    pass


class DimensionMismatch(RiskModelError):
    pass


class NoPath(RiskModelError):
    pass


class UncoverableThreat(RiskModelError):
    pass


class InvalidFrequency(RiskModelError):
    pass


class InvalidPeriod(RiskModelError):
    pass


class InvalidAlpha(RiskModelError):
    pass


class MalformedCsv(RiskModelError):
    pass


class EmptyCell(RiskModelError):
    pass


class NoConvergence(RiskModelError):
    """Fixed-point iteration hit its round limit.

    Attributes:
        last_iterate: the final iterate (usually a LossDistribution).
        residual: sup-distance between the last two iterates.
    """

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
