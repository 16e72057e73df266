"""Exception hierarchy shared by all platoon_vss modules."""


class PlatoonError(Exception):
    """Base class for all errors raised by this package."""


class NonSquareError(PlatoonError):
    pass


class NonBinaryEntryError(PlatoonError):
    pass


class NonzeroDiagonalError(PlatoonError):
    pass


class DimensionMismatchError(PlatoonError):
    pass


class SingularMatrixError(PlatoonError):
    """H (or a pivot during its elimination) is numerically singular."""


class NonFiniteError(PlatoonError):
    """A state or input became NaN/Inf, or the divergence guard tripped."""


class OutOfHorizonError(PlatoonError):
    pass


class MissingBoundsError(PlatoonError):
    pass


class GridMismatchError(PlatoonError):
    pass


class EmptyLogError(PlatoonError):
    pass


class ScenarioParseError(PlatoonError):
    """Scenario file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class ValidationError(PlatoonError):
    """A config value violates an invariant; names the offending key."""


class ConfigInvalidError(PlatoonError):
    pass
