"""Exception hierarchy shared by all modules."""


class PennerError(Exception):
    """Base class for every error raised by the package."""


class ParseError(PennerError):
    pass


class InvariantError(PennerError):
    pass


class UnknownVertex(PennerError):
    pass


class ZeroPolynomial(PennerError):
    pass


class NonpositiveEvaluationPoint(PennerError):
    pass


class SizeMismatch(PennerError):
    pass


class DetNotLaurent(PennerError):
    pass


class DirectionError(PennerError):
    pass


class NonStrictWord(PennerError):
    pass


class NonConvergence(PennerError):
    pass


class MCViolation(PennerError):
    pass


class DegreeError(PennerError):
    pass


class NotMinimal(PennerError):
    pass


class PatternNotFound(PennerError):
    pass


class ZeroObject(PennerError):
    pass


class BudgetExceeded(PennerError):
    """Raised when a complex outgrows its factor-dimension budget.

    ``partial`` carries whatever was computed before the abort (an
    OrbitReport for orbits, ``None`` otherwise).
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InsufficientData(PennerError):
    pass


class MismatchError(PennerError):
    pass
