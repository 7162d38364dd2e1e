"""Exception types raised by the simulation engines and config layer."""


class LatKeplerError(Exception):
    """Base class for all package errors."""


class SingularPotentialError(LatKeplerError, ValueError):
    """Evaluation point coincides with an unsoftened Coulomb source."""


class ZeroHoppingError(LatKeplerError, ValueError):
    pass


class NoRootError(LatKeplerError, ValueError):
    pass


class DomainError(LatKeplerError, ValueError):
    pass


class GridTooSmallError(LatKeplerError, ValueError):
    pass


class NonFiniteError(LatKeplerError, FloatingPointError):
    pass


class DegenerateFitError(LatKeplerError, ValueError):
    pass


class ConfigError(LatKeplerError, ValueError):
    """Invalid configuration text or parameter values.

    ``line`` is the 1-based line number in the source text when known.
    """

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalGuardError(LatKeplerError, RuntimeError):
    """A run was aborted by a numerical safety guard."""


class SingularityApproachError(NumericalGuardError):
    pass


class BoundaryContaminationError(NumericalGuardError):
    pass


class GridGrowthError(NumericalGuardError):
    pass
