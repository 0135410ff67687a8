"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class InvalidModel(ValueError):
    """An MDP builder was given data that cannot be repaired into a valid model."""


class SingularMatrix(ArithmeticError):
    """Elimination hit a pivot below the singularity threshold."""


class ZeroDiagonal(ArithmeticError):
    """A Gauss-Seidel sweep needs a nonzero diagonal entry in every row."""


class NoConvergence(ArithmeticError):
    """An iterative method exhausted its sweep budget before meeting its tolerance."""

    def __init__(self, message, residual=None, sweeps=None):
        super().__init__(message)
        self.residual = residual
        self.sweeps = sweeps
