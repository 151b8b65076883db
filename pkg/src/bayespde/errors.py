"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """A vector or point has the wrong length for the object it is paired with."""


class DomainError(ValueError):
    """An evaluation point lies outside the admissible domain."""


class ConfigurationError(ValueError):
    """A configuration is inconsistent or incomplete."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite values."""


class ConvergenceError(RuntimeError):
    """An iterative procedure failed to converge."""
