"""Exception types shared across the package.

``ValidationError`` and its subclasses map to CLI exit code 2 (bad arguments,
shapes, or configuration); file-format problems live in :mod:`admmprune.io`
and map to exit code 1.
"""


class ValidationError(ValueError):
    """Inputs violate a documented precondition."""


class ShapeError(ValidationError):
    """Array dimensions do not conform."""


class ConfigError(ValidationError):
    """A configuration value is out of range or unknown."""


class NotSpdError(ValidationError):
    """Cholesky factorization failed: matrix is not positive definite."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        if message is None:
            message = (
                "matrix is not positive definite "
                f"(factorization failed at pivot {pivot})"
            )
        super().__init__(message)


class SingularSystemError(ValidationError):
    """A restricted normal-equation system was singular."""


class DivergenceError(RuntimeError):
    """A gradient-descent updater exceeded the divergence guard."""

    def __init__(self, step, objective):
        self.step = step
        self.objective = objective
        super().__init__(
            f"objective diverged at step {step} (value {objective!r}); "
            "reduce the learning rate"
        )
