"""Exception hierarchy shared by all modules."""


class LyapqcError(Exception):
    pass


class ParameterDomainError(LyapqcError, ValueError):
    """A constructor or operation received parameters outside their domain."""


class DataError(LyapqcError, ValueError):
    """Sampled input data is degenerate (repeated points, non-monotone, ...)."""


class DomainError(LyapqcError, ValueError):
    """A point lies outside the domain where an operation is defined."""


class PreconditionError(LyapqcError, ValueError):
    """A sampled precondition of a check failed; ``witness`` holds the offending point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GeometryError(LyapqcError):
    pass


class CompositionError(LyapqcError):
    pass


class NumericalError(LyapqcError, RuntimeError):
    """An iterative solver failed; ``residual`` (scalar or history) is attached."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RenderError(LyapqcError):
    pass


class ScenarioError(LyapqcError):
    """Configuration error in a scenario file (maps to exit status 2)."""
