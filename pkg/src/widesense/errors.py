"""Error and warning types shared across the package."""


class InvalidSpecError(ValueError):
    """A signal or configuration object violates its own consistency rules."""


class DimensionError(ValueError):
    """Array shapes do not line up for the requested operation."""


class ParameterError(ValueError):
    """A scalar parameter is outside its admissible range."""


class CriterionUnsatisfiableWarning(UserWarning):
    """The fixed-confidence halting threshold is non-positive at this testing
    size, so the halting test can never fire no matter how small the residual
    gets.  Raise the testing budget or relax the confidence target."""
