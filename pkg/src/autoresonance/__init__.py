"""Stability of autoresonance under persistent perturbations: models, certificates, experiments."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AutoresonanceError,
    ConfigError,
    DegenerateParametersError,
    DomainError,
    FitError,
    InvalidInputError,
    StiffnessError,
)
from .dynamics import DuffingParams, ModelParams, PhaseState, TransformedState  # noqa: E402
from .asymptotics import SeriesCoeffs, extend_coeffs, leading_coeffs, reference_series  # noqa: E402
from .integrate import IntegratorConfig, Trajectory, integrate  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "AutoresonanceError",
    "ConfigError",
    "DegenerateParametersError",
    "DomainError",
    "FitError",
    "InvalidInputError",
    "StiffnessError",
    "DuffingParams",
    "ModelParams",
    "PhaseState",
    "TransformedState",
    "SeriesCoeffs",
    "extend_coeffs",
    "leading_coeffs",
    "reference_series",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
]
