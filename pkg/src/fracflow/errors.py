"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input or an
unsupported configuration, CLI exit code 1) and :class:`NumericalError`
(the computation itself failed, CLI exit code 2).
"""


class FracflowError(Exception):
    pass


class ValidationError(FracflowError, ValueError):
    pass


class ConfigParseError(ValidationError):
    pass


class ResolutionError(ValidationError):
    pass


class GeometryError(ValidationError):
    pass


class HypothesisViolationError(ValidationError):
    pass


class DegenerateInputError(ValidationError):
    pass


class InsufficientDataError(ValidationError):
    pass


class QuadratureDomainError(ValidationError):
    """Evaluation point lies inside the target cell; use the principal-value path."""


class SingularEndpointError(QuadratureDomainError):
    """Evaluation point coincides with a cell endpoint; the integral diverges."""


class NumericalError(FracflowError, ArithmeticError):
    pass


class SolverStagnationError(NumericalError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class AccuracyError(NumericalError):
    def __init__(self, message, suggested_nodes=None):
        super().__init__(message)
        self.suggested_nodes = suggested_nodes


class SnapshotLookupError(ValidationError):
    pass
