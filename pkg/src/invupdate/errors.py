"""Exception hierarchy shared by every module of the package."""


class InvUpdateError(Exception):
    """Base class for all errors raised by invupdate."""


class InvalidDimension(InvUpdateError, ValueError):
    pass


class BasisOverflow(InvUpdateError, OverflowError):
    pass


class ShapeError(InvUpdateError, ValueError):
    pass


class EmptyBatch(InvUpdateError, ValueError):
    pass


class EmptyState(InvUpdateError, ValueError):
    pass


class RankDeficient(InvUpdateError, ValueError):
    """Too few samples for the moment matrix to be invertible."""


class MissingMatrix(InvUpdateError, ValueError):
    """A direct-inversion update needs the moment matrix itself, not only its inverse."""


class NumericalError(InvUpdateError, ArithmeticError):
    """Base class for numerical breakdowns (mapped to exit code 4 by the CLI)."""


class NotPositiveDefinite(NumericalError):
    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not positive definite (pivot {pivot})")


class SingularUpdate(NumericalError):
    def __init__(self, row, denominator):
        self.row = row
        self.denominator = denominator
        super().__init__(
            f"Sherman-Morrison denominator {denominator!r} too close to zero at row {row}"
        )


class ConditioningFailure(NumericalError):
    pass
