"""Exception hierarchy shared by every module of the package."""


class ProdSpaceError(Exception):
    """Base class for all errors raised by prodspace."""


class DimensionError(ProdSpaceError, ValueError):
    """Array shapes do not match the geometry they are used with."""


class DomainError(ProdSpaceError, ValueError):
    """A point, tangent vector or argument lies outside its admissible set."""


class SingularityError(DomainError):
    """An operator is evaluated at one of its singular configurations."""


class ParameterError(ProdSpaceError, ValueError):
    """Classifier parameters violate their norm constraints."""


class DegenerateNormalizationError(ProdSpaceError, ArithmeticError):
    """Raised when a Lorentzian normalization would take the root of a non-positive number."""

    def __init__(self, message, lorentz_sq):
        super().__init__(message)
        self.lorentz_sq = lorentz_sq


class SolverError(ProdSpaceError, RuntimeError):
    """The convex solver failed or the problem is degenerate."""


class GenerationStallError(ProdSpaceError, RuntimeError):
    """Rejection sampling accepts too few draws to make progress."""


class ConstructionError(ProdSpaceError, RuntimeError):
    """A constructive witness (shattering set) could not be built."""


class DatasetFormatError(ProdSpaceError, ValueError):
    """A dataset file is malformed or contains invalid points."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
