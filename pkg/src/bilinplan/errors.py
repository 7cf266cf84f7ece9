"""Exception hierarchy shared by every module."""


class BilinearError(Exception):
    """Base class for all library errors."""


class SingularMatrix(BilinearError):
    """A pivot fell below the singularity tolerance."""


class NotSymmetric(BilinearError):
    """Input to a symmetric routine was not symmetric."""


class DimensionMismatch(BilinearError):
    """Vector or matrix shapes do not agree."""


class XInfeasible(BilinearError):
    """The side-1 feasible set is empty."""


class XUnbounded(BilinearError):
    """The side-1 best response is unbounded."""


class YInfeasible(BilinearError):
    """The side-2 feasible set is empty."""


class YUnbounded(BilinearError):
    """The side-2 feasible set is unbounded."""


class InvalidModel(BilinearError):
    """A decision model violates its structural invariants."""


class TooLarge(BilinearError):
    """Exhaustive enumeration would exceed the size cap."""


class RankDeficientRows(BilinearError):
    """Constraint rows are linearly dependent and inconsistent."""
