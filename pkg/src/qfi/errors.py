"""Exception hierarchy.

Two families: ``ValidationError`` for inputs that violate a contract
(CLI exit code 2) and ``NumericalError`` for failures of the numerics
themselves (CLI exit code 3).
"""


class QfiError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(QfiError, ValueError):
    pass


class NumericalError(QfiError, ArithmeticError):
    pass


class NotHermitian(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPositiveSemidefinite(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class NotQubit(ValidationError):
    pass


class WeightMismatch(ValidationError):
    pass


class InconsistentBlockDims(ValidationError):
    pass


class InvalidEnsemble(ValidationError):
    pass


class InvalidSize(ValidationError):
    pass


class IncompleteBundle(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class UnsupportedParametrization(ValidationError):
    pass


class TruncationTooSmall(ValidationError):
    pass


class EigensolverFailure(NumericalError):
    pass


class EvaluationFailure(NumericalError):
    pass


class DegenerateGap(NumericalError):
    pass


class SupportDimensionChanged(NumericalError):
    pass


class SingularDeterminant(NumericalError):
    pass


class DegenerateWeight(NumericalError):
    pass
