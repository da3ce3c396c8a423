"""Exception types shared across the package."""


class LambdaflowError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(LambdaflowError, ValueError):
    """A physical or structural invariant was violated."""


class ConfigParseError(LambdaflowError):
    """A run-configuration document could not be parsed."""


class NonFiniteError(LambdaflowError):
    """Integrator state left the finite range (indicates a bug, not physics)."""


class StepFailureError(LambdaflowError):
    """Adaptive stepper could not meet tolerance at the minimum step size."""


class GridMismatchError(LambdaflowError):
    """Two trajectories that must share a time grid do not."""


class GridTooLargeError(LambdaflowError):
    """Requested grid exceeds the step budget of an O(N^2) routine."""


class BadGridError(LambdaflowError):
    """A uniform time grid was required but not supplied."""
