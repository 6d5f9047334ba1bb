"""Exception types raised across the package."""


class InvalidConfigError(ValueError):
    """A scenario or parameter set violates its invariants."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class InfeasibleSpacingError(ValueError):
    """A requested coupling coefficient cannot be reached with a nonnegative spacing."""

    def __init__(self, message, pa_index=None):
        super().__init__(message)
        self.pa_index = pa_index


class IntegrationAccuracyError(RuntimeError):
    """Step-halving check of the CME integrator exceeded its tolerance."""


class LayoutError(ValueError):
    """PA positions violate ordering, spacing or bound constraints."""


class DegenerateChannelError(ValueError):
    """All channel vectors are zero, no precoder can be formed."""


class NearSingularChannelError(ValueError):
    """Zero-forcing requested on a (near) singular channel without loading."""
