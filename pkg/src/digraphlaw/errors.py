"""Exception types raised across the package."""


class DigraphLawError(Exception):
    """Base class for all package errors."""


class ValidationError(DigraphLawError, ValueError):
    """Invalid input parameters."""


class NumericalError(DigraphLawError, ArithmeticError):
    """A numerical routine failed or produced an untrustworthy result."""


# digraph
class RetryExhausted(NumericalError):
    pass


class UnknownVertex(ValidationError, KeyError):
    pass


class ScaleCollapse(ValidationError):
    """The ordering R > r > ell of the radius scales fails at this size.

    The computed (unordered) scales are kept on ``.params`` so callers can
    inspect them or fall back to explicit overrides.
    """

    def __init__(self, message, params=None):
        super().__init__(message)
        self.params = params


# switching
class EmptyComplement(ValidationError):
    pass


class InconsistentData(ValidationError):
    pass


# selfconsistent
class BranchAmbiguity(NumericalError):
    pass


class NonHerglotz(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


# treegreen / resolvent
class SizeOverflow(ValidationError):
    pass


class DeficitOutOfRange(ValidationError):
    pass


class SingularMatrix(NumericalError):
    pass


class SingularPivot(NumericalError):
    pass


class SingularBlock(NumericalError):
    pass


class NotATree(ValidationError):
    pass


# girko
class EigFailure(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


# cli
class ConfigInvalid(ValidationError):
    pass
