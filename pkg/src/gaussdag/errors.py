"""Exception hierarchy shared by every module."""


class GaussDagError(Exception):
    """Base class for all errors raised by gaussdag."""


class NotPositiveDefinite(GaussDagError, ValueError):
    pass


class IndexOutOfRange(GaussDagError, IndexError):
    pass


class EmptyIndexSet(GaussDagError, ValueError):
    pass


class InvalidIndexSet(GaussDagError, ValueError):
    """Index set is not strictly increasing, or blocks overlap / don't cover."""


class DimensionMismatch(GaussDagError, ValueError):
    pass


class CycleDetected(GaussDagError, ValueError):
    pass


class NotAPermutation(GaussDagError, ValueError):
    pass


class ArcNotPresent(GaussDagError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "arc not present"


class CapExceeded(GaussDagError, RuntimeError):
    pass


class TooLarge(GaussDagError, ValueError):
    pass


class ParseError(GaussDagError, ValueError):
    pass


class MissingValue(ParseError):
    pass


class RaggedRow(ParseError):
    pass


class ShapeMismatch(GaussDagError, ValueError):
    pass


class DegreesOfFreedomTooSmall(GaussDagError, ValueError):
    pass


class InvalidDegreesOfFreedom(GaussDagError, ValueError):
    pass


class NonPositiveVariance(GaussDagError, ValueError):
    pass


class NonPositive(GaussDagError, ValueError):
    pass


class ChildInParents(GaussDagError, ValueError):
    pass
