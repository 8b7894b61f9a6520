"""Exceptions raised by fairlip."""


class FairlipError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(FairlipError, ValueError):
    """A domain value does not satisfy its invariants."""


class DimensionMismatchError(ValidationError):
    """Two probability vectors are not over the same outcome set."""


class MalformedProgramError(ValidationError):
    """A linear program is not well formed (shape, bounds, non-finite data)."""


class UnverifiedMetricError(ValidationError):
    """An operation needs the triangle inequality but it was never verified."""


class DocumentError(ValidationError):
    """An instance or mapping document could not be read or validated."""


class SolverError(FairlipError, RuntimeError):
    """The solver failed in a way that indicates an internal problem."""


class InfeasibleParityError(FairlipError):
    """The restricted Earthmover program has no solution for the given slack.

    Attributes:
        eps: The parity slack that was requested.
        minimal_eps: The smallest slack the within-group constraints allow.

    """

    def __init__(self, eps: float, minimal_eps: float) -> None:
        super().__init__(
            f"parity slack {eps:g} is infeasible, the smallest achievable "
            f"slack is {minimal_eps:g}"
        )
        self.eps = eps
        self.minimal_eps = minimal_eps
