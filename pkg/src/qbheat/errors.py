"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: usage errors -> 1, data/validation
errors -> 2, numerical failures -> 3.
"""


class QBHeatError(Exception):
    """Base class for all package errors."""


class ValidationError(QBHeatError):
    """Invalid argument values, shapes, or domain preconditions."""


class ShapeError(ValidationError):
    """Dimension or shape mismatch between operands."""


class NonFiniteError(ValidationError):
    """Input contains NaN or infinity."""


class LayoutError(ValidationError):
    """Masking geometry violation: indivisible dims, inapplicable direction."""


class StabilityError(ValidationError):
    """Explicit time step violates the stability bound."""


class FormatError(ValidationError):
    """Base for serialized-input problems (field files, images, JSON specs)."""


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class NumericalError(QBHeatError):
    """Base for runtime numerical failures."""


class SingularMatrixError(NumericalError):
    """Pivot collapsed during factorization; matrix singular to tolerance."""


class ConvergenceError(NumericalError):
    """Iteration exhausted its sweep budget without converging."""


class OverflowLimitError(NumericalError):
    """Generated values exceeded the magnitude guard."""


class DivergenceError(NumericalError):
    """Iterative fit lost control of the loss."""


class DegenerateSpectrumError(NumericalError):
    """Repeated eigenvalues where distinct ones are required."""


class DegenerateDataError(ValidationError):
    """Data carries no usable signal (e.g. all positions constant)."""


class CollapseError(QBHeatError):
    """Fitting aborted on the degenerate constant-field solution."""

    def __init__(self, message, flags):
        super().__init__(message)
        self.flags = flags
