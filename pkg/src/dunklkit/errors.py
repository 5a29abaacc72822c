"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """Invalid mathematical input (negative multiplicity, t <= 0, ...)."""


class NumericalAccuracyError(RuntimeError):
    """A numerical routine could not reach its accuracy target.

    Carries the attained residual in ``residual`` when known.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TailMassError(RuntimeError):
    """Quadrature truncation would lose non-negligible mass."""


class HyperplaneSingularityError(RuntimeError):
    """Differential-difference quotient evaluated on a reflecting
    hyperplane where the limit does not exist."""


class TranslationConsistencyError(RuntimeError):
    """Radial (density) translation disagrees with the spectral
    definition beyond the acceptance gate."""

    def __init__(self, message, rel_error=None):
        super().__init__(message)
        self.rel_error = rel_error


class InternalConsistencyError(AssertionError):
    """An emitted symbolic term violates its order constraint."""


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""
