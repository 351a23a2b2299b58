"""Exceptions raised by the scattering toolkit."""


class ScatteringError(Exception):
    """Base class for every error raised by the backend."""


class DomainError(ScatteringError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ShapeLookupError(ScatteringError, KeyError):
    """Unknown shape name."""


class AcquisitionError(ScatteringError, ValueError):
    """Inconsistent acquisition geometry or operator dimensions."""


class NearResonanceError(ScatteringError):
    """The boundary system is too ill-conditioned to be trusted."""

    def __init__(self, omega, condition):
        self.omega = omega
        self.condition = condition
        super().__init__(
            f"boundary system near resonance at omega={omega:.6g} "
            f"(condition number {condition:.3e})"
        )


class BoundNotApplicableError(ScatteringError):
    """Preconditions of the truncation error bound do not hold."""


class IncomparableError(ScatteringError):
    """No valid scale sample exists for a dictionary entry."""


class IdentificationError(ScatteringError):
    """Identification could not produce a result."""


class ConfigError(ScatteringError, ValueError):
    """Experiment configuration failed validation."""
