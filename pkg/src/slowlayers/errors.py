"""Exception hierarchy.

``ValidationError`` subclasses are caller mistakes (CLI exit code 2);
``NumericalError`` subclasses are failures of a numerical method (exit code 3).
"""


class SlowLayersError(Exception):
    pass


class ValidationError(SlowLayersError, ValueError):
    pass


class NumericalError(SlowLayersError, ArithmeticError):
    pass


class WrongRegimeError(ValidationError):
    """Operation only defined for another (p, n) regime."""


class EpsilonTooLargeError(ValidationError):
    """Compacton support does not fit between the prescribed zeros."""


class InadmissibleAError(ValidationError):
    pass


class TargetOutOfRangeError(ValidationError):
    pass


class InsufficientSamplesError(ValidationError):
    pass


class EmptySetError(ValidationError):
    """Hausdorff distance requested with an empty interface set."""


class QuadratureError(NumericalError):
    pass


class InversionError(NumericalError):
    pass


class BisectionStallError(NumericalError):
    pass


class DtUnderflowError(NumericalError):
    pass
