"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A numeric parameter is outside its allowed range."""


class DimensionError(ValueError):
    """Operator or state dimensions do not match what an operation expects."""


class CPTPError(ValueError):
    """A map failed complete-positivity / trace-preservation validation.

    Carries the most negative Choi eigenvalue when complete positivity is
    the failing condition.
    """

    def __init__(self, message, min_choi_eigenvalue=None):
        super().__init__(message)
        self.min_choi_eigenvalue = min_choi_eigenvalue


class DegenerateConditioningError(ValueError):
    """Conditioning event has probability below the underflow threshold."""


class UnsupportedRegimeError(ValueError):
    """Requested formula is undefined for the supplied parameters."""
