"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a documented precondition (shape, hermiticity, charge)."""


class NumericalError(RuntimeError):
    """Computation produced NaN/empty spectra or hit a resonance divisor."""


class ResourceError(RuntimeError):
    """A configured size/memory budget would be exceeded."""
