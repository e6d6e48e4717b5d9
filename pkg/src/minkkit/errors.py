"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: input and unsupported-operation
errors exit with 2, numeric errors with 3.
"""


class MinkkitError(Exception):
    """Base class for toolkit errors."""


class InputError(MinkkitError, ValueError):
    """Malformed or out-of-contract input."""


class UnsupportedOperationError(InputError):
    """The operation is not defined for the given norm model."""


class NumericError(MinkkitError, ArithmeticError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DefectiveOperatorError(NumericError):
    """The operator has a nontrivial Jordan block and no real block form."""


class ResourceError(MinkkitError, RuntimeError):
    """A combinatorial search exceeded its candidate budget."""
