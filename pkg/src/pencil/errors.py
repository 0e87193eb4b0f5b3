"""Exception hierarchy shared by every module of the package."""


class PencilError(Exception):
    """Base class. ``exit_code`` is used by the command line front end."""

    exit_code = 3


class InputError(PencilError, ValueError):
    exit_code = 2


class DimensionMismatch(InputError):
    pass


class NotSymmetric(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class NotMonic(InputError):
    pass


class ZeroLambda(InputError):
    pass


class SeedInvalid(InputError):
    pass


class NumericalError(PencilError, ArithmeticError):
    exit_code = 3


class NonConvergence(NumericalError):
    pass


class SingularMatrix(NumericalError):
    pass


class BranchCut(NumericalError):
    pass


class NotElliptic(NumericalError):
    pass


class NotNeumannWellPosed(NumericalError):
    pass


class IllConditionedEigenbasis(NumericalError):
    pass


class ResidualTooLarge(NumericalError):
    pass


class RangeViolation(NumericalError):
    pass


class ImplicationViolation(NumericalError):
    pass


class BoundaryZero(NumericalError):
    pass


class PhaseJump(NumericalError):
    pass


class MaxDepthExceeded(NumericalError):
    pass


class InvariantViolation(NumericalError):
    pass


class Mismatch(NumericalError):
    def __init__(self, message, offending=()):
        super().__init__(message)
        self.offending = list(offending)


class StepUnderflow(NumericalError):
    pass
