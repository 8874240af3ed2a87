"""Exception hierarchy shared by every module of the package."""


class LocstineError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(LocstineError, ValueError):
    """Malformed construction parameters (block sizes, flags, level maps)."""


class LevelError(LocstineError, ValueError):
    """A seminorm or flag level outside the valid range."""


class AlgebraMismatchError(LocstineError, ValueError):
    """Operands live in different algebras or domains."""


class ShapeError(LocstineError, ValueError):
    """Array shapes are inconsistent with the declared structure."""


class NotInCEDError(LocstineError, ValueError):
    """Operator does not commute with the flag projections of its domain."""

    def __init__(self, level, residual):
        self.level = level
        self.residual = residual
        super().__init__(
            f"operator does not preserve the flag at level {level} "
            f"(off-block mass {residual:.3e})"
        )


class NotAdmissibleError(LocstineError):
    """Gram matrix of a map is not positive semidefinite within tolerance."""


class ConstructionError(LocstineError):
    """Dilation could not be built consistently from the Gram data."""

    def __init__(self, message, p=None, index=None, residual=None):
        self.p = p
        self.index = index
        self.residual = residual
        super().__init__(message)


class PreconditionError(LocstineError):
    """An input violated a documented precondition (e.g. non-minimal triple)."""


class InconsistencyError(LocstineError):
    """Certified residuals exceeded tolerance."""


class OrderError(LocstineError):
    """Domination psi <= phi does not hold."""


class NotInCommutantError(LocstineError):
    """Operator is not in the commutant of the dilation representations."""
