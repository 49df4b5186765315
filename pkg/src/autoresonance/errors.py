"""Exception hierarchy shared by every module of the package."""


class AutoresonanceError(Exception):
    """Base class for all package errors."""


class InvalidInputError(AutoresonanceError, ValueError):
    """Raised for non-finite or otherwise malformed numeric input."""


class DomainError(AutoresonanceError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class DegenerateParametersError(DomainError):
    """Raised when the order-matching system of the asymptotic series is singular."""


class ConfigError(AutoresonanceError, ValueError):
    """Raised for invalid experiment configurations or distribution descriptors."""


class StiffnessError(AutoresonanceError, RuntimeError):
    """Raised when the adaptive step size underflows."""


class FitError(AutoresonanceError, ValueError):
    """Raised when a decay-rate fit cannot be performed."""


class IncompleteRunError(AutoresonanceError, RuntimeError):
    """Raised after outputs were written when an integration stopped at its step budget."""
