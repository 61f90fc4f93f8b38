"""Exception hierarchy. The CLI maps these onto process exit codes."""


class RobustPriceError(Exception):
    """Base class for everything raised deliberately by this package."""


class InputError(RobustPriceError, ValueError):
    """Malformed document, argument, or domain object (exit code 2)."""


class GridMismatchError(InputError):
    """Two weight vectors live on different value grids."""


class InfeasibleSetError(RobustPriceError):
    """The uncertainty set contains no distribution (exit code 3)."""


class NumericalFailureError(RobustPriceError):
    """The LP solver failed or produced an unusable answer (exit code 4)."""


class InconsistentInputsError(NumericalFailureError):
    """A raw worst-case value beats its own optimum by more than tolerance."""


class CrossInfeasibleError(NumericalFailureError):
    """No mechanism meets the old-criterion bound even after slack."""
