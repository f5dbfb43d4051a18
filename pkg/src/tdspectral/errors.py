"""Exception hierarchy shared across the toolkit."""


class TDSpectralError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(TDSpectralError):
    """Invalid input data (model files, argument combinations, schema violations).

    ``field`` holds a dotted path into the offending structure when known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class DimensionMismatchError(ValidationError):
    """Delay assignment inconsistent with the delay structure of a quasipolynomial."""


class DerivativeCapError(TDSpectralError):
    """A requested derivative order exceeds the configured cap."""


class BoundaryRootError(TDSpectralError):
    """|f| dipped below tolerance on a contour: a root (nearly) sits on the boundary."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class NonIntegerWindingError(TDSpectralError):
    """Accumulated boundary phase is not close to an integer multiple of 2*pi."""


class BudgetExhaustedError(TDSpectralError):
    """An iterative search ran out of its subdivision/refinement budget.

    ``pending`` carries whatever partial state is useful to the caller
    (e.g. the unresolved sub-box).
    """

    def __init__(self, message, pending=None):
        self.pending = pending
        super().__init__(message)


class NotARootError(TDSpectralError):
    """A point claimed to be a characteristic root is not one (residual too large)."""


class ImaginaryAxisRootError(TDSpectralError):
    """The unstable-root count is ill-defined: a root sits on the imaginary axis."""


class MultipleRootError(TDSpectralError):
    """A simple-root method was called at a multiple root."""


class UnresolvedTangencyError(TDSpectralError):
    """A frequency-sweeping branch could not be classified against the unit line."""


class NotSupportedError(TDSpectralError):
    """Input falls outside the implemented scope (documented limitation)."""
