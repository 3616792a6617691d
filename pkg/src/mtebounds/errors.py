"""Exception hierarchy shared across the package."""


class MteBoundsError(Exception):
    """Base class for all errors raised by mtebounds."""


class DomainError(MteBoundsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(MteBoundsError, ValueError):
    """A target, assumption or engine setting is malformed or incomplete."""


class CapacityError(MteBoundsError):
    """The requested problem exceeds a hard size limit."""


class DataError(MteBoundsError, ValueError):
    """Input data is inconsistent, incomplete or violates a support condition."""


class FormatError(DataError):
    """A distribution or sample file does not follow the expected format."""


class StructuralError(MteBoundsError, ValueError):
    """A linear program has inconsistent dimensions."""


class SolverError(MteBoundsError):
    """The simplex solver broke down numerically.

    The offending program is attached as ``lp`` when available.
    """

    def __init__(self, message, lp=None, diagnostics=None):
        super().__init__(message)
        self.lp = lp
        self.diagnostics = diagnostics or {}


class RelevanceError(DataError):
    """The instrument has no effect on the propensity, or a propensity is 0 or 1."""


class RankDeficientError(StructuralError):
    """An equality matrix lacks full row rank; ``rows`` lists the dependent rows."""

    def __init__(self, message, rows=()):
        super().__init__(message)
        self.rows = tuple(rows)
