"""Exception hierarchy."""


class CavityCoolError(Exception):
    """Base class for all package errors."""


class DomainError(CavityCoolError, ValueError):
    """An input lies outside the physical domain of a model."""


class SaturationError(DomainError):
    """The atom would be driven above the configured saturation budget."""

    def __init__(self, message: str, saturation: float, limit: float):
        super().__init__(message)
        self.saturation = saturation
        self.limit = limit

    @property
    def power_reduction(self) -> float:
        """Factor by which the pump power has to drop to meet the budget."""
        return self.saturation / self.limit


class HeatingError(DomainError):
    """Friction is non-negative so no equilibrium temperature exists."""


class SolverError(CavityCoolError):
    """The boundary value problem is singular for this stack."""


class CavityError(CavityCoolError):
    """No usable resonance was found when characterizing a resonator."""


class ConvergenceError(CavityCoolError):
    """A numerical limit failed to settle."""

    def __init__(self, message: str, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class SweepError(CavityCoolError):
    """Every point of a sweep failed."""


class OptimizationError(CavityCoolError):
    """An optimum could not be bracketed."""


class ConfigError(CavityCoolError):
    """Malformed run configuration."""
