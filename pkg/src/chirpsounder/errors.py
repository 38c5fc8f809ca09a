"""Exception types shared across the package."""


class ChirpSounderError(Exception):
    """Base class for all errors raised by this package."""


class ConstraintViolationError(ChirpSounderError, ValueError):
    """A waveform design constraint or parameter precondition failed."""


class DimensionMismatchError(ChirpSounderError, ValueError):
    """Operands have incompatible shapes or lengths."""


class UndefinedResultError(ChirpSounderError, ValueError):
    """The requested quantity is undefined for this input (e.g. PAPR of zeros)."""


class ConfigError(ChirpSounderError, ValueError):
    """A scenario configuration is malformed or inconsistent."""


class NumericalError(ChirpSounderError, RuntimeError):
    """A numerical routine failed (ill-conditioning, overflow, ...)."""


class IllConditionedError(NumericalError):
    """A least-squares system was too ill-conditioned to solve reliably."""

    def __init__(self, message, condition_estimate):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate
