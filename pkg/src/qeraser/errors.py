"""Exception types shared across the package."""


class QeraserError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(QeraserError):
    """A physical input failed validation (e.g. non-normalized coefficients)."""


class ConfigurationError(QeraserError):
    """A grid, coupling, or run configuration is unusable as given."""


class DegeneratePostSelectionError(QeraserError):
    """Post-selection probability is zero (or numerically indistinguishable
    from zero), so the conditional quantities it would normalize are undefined."""


class EmptySubEnsembleError(QeraserError):
    """No recorded events match the requested (basis, outcome) filter."""
