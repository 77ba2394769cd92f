"""Exception hierarchy shared by every module."""


class NCBallError(Exception):
    """Base class for all library errors."""


class NotHermitian(NCBallError):
    pass


class NegativeSpectrum(NCBallError):
    pass


class IllConditioned(NCBallError):
    pass


class ShapeMismatch(NCBallError, ValueError):
    pass


class RangeViolation(NCBallError):
    pass


class DomainViolation(NCBallError):
    pass


class NoConvergence(NCBallError):
    pass


class NotRowIsometry(NCBallError):
    pass


class NotCommuting(NCBallError):
    pass


class ContractViolation(NCBallError):
    """Raised when a rigidity hypothesis fails; carries the offending coefficient."""

    def __init__(self, message, word=None, coefficient=None):
        super().__init__(message)
        self.word = word
        self.coefficient = coefficient


class UnknownSuite(NCBallError, KeyError):
    pass


class ConfigInvalid(NCBallError, ValueError):
    pass


class InputInvalid(NCBallError, ValueError):
    """Malformed JSON input; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
