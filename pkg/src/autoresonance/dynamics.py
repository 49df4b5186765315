"""Parameter/state types and the right-hand sides of the resonance model.

The slow amplitude ``r`` and phase shift ``psi`` of a parametrically pumped
oscillator obey

    dr/dtau   = r sin(psi) - delta r
    dpsi/dtau = r - lambda tau + f cos(psi)

with persistent perturbations entering either scaled by ``mu``
(deterministic case) or directly (random case).  Near the growing
autoresonant solution the system is studied in shifted and rescaled
coordinates ``R = (r - R_ref) / sqrt(lambda tau)``, ``Psi = psi - Psi_ref``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, NamedTuple, Optional, Tuple

import numpy as np

from . import _hamiltonian
from .errors import DomainError, InvalidInputError

if TYPE_CHECKING:
    from .asymptotics import SeriesCoeffs

__all__ = [
    "ModelParams",
    "PhaseState",
    "TransformedState",
    "DuffingParams",
    "PerturbationValues",
    "rhs_unperturbed",
    "rhs_perturbed",
    "rhs_random",
    "to_transformed",
    "from_transformed",
    "rhs_transformed",
    "duffing_phase",
    "duffing_rhs",
    "duffing_envelope",
]


def _require_finite(*values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInputError(f"non-finite input: {v!r}")


def _require_positive_tau(tau) -> None:
    _require_finite(tau)
    if np.any(np.asarray(tau) <= 0):
        raise DomainError(f"tau must be positive, got {tau!r}")


@dataclass(frozen=True)
class ModelParams:
    """Sweep rate ``lam``, dissipation ``delta`` and pumping factor ``f``."""

    lam: float
    delta: float
    f: float

    def __post_init__(self):
        _require_finite(self.lam, self.delta, self.f)
        if self.lam <= 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if self.delta < 0:
            raise DomainError(f"delta must be nonnegative, got {self.delta}")
        if self.f == 0:
            raise DomainError("pumping factor f must be nonzero")

    @property
    def sigma(self) -> float:
        """``sqrt(1 - delta**2)``; only defined for ``delta <= 1``."""
        if self.delta > 1:
            raise DomainError(f"sigma undefined for delta={self.delta} > 1")
        return math.sqrt(1.0 - self.delta * self.delta)

    @property
    def m(self) -> float:
        """Dissipation-pumping constant ``delta f / sqrt(lambda)``."""
        return self.delta * self.f / math.sqrt(self.lam)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "delta": self.delta, "f": self.f}


class PhaseState(NamedTuple):
    """Original slow variables; ``psi`` is kept unwrapped."""

    r: float
    psi: float


class TransformedState(NamedTuple):
    """Deviation from the reference solution in rescaled coordinates."""

    R: float
    Psi: float

    @property
    def rho(self):
        return np.hypot(self.R, self.Psi)


class PerturbationValues(NamedTuple):
    xi: float
    eta: float
    zeta: float


@dataclass(frozen=True)
class DuffingParams:
    """Damping ``beta``, cubic stiffness ``gamma``, pump amplitude ``eps``, chirp rate ``alpha``."""

    beta: float
    gamma: float
    eps: float
    alpha: float

    def __post_init__(self):
        _require_finite(self.beta, self.gamma, self.eps, self.alpha)
        if self.beta < 0:
            raise DomainError("beta must be nonnegative")
        if self.gamma <= 0:
            raise DomainError("gamma must be positive")
        if self.eps <= 0:
            raise DomainError("eps must be positive")
        if self.alpha <= 0:
            raise DomainError("alpha must be positive")

    @property
    def kappa(self) -> float:
        return 2.0 / (3.0 * self.gamma)

    def averaged(self) -> ModelParams:
        """Parameters of the averaged slow system (``lambda = 8 alpha / eps^2``, ``delta = 2 beta / eps``, ``f = 1``)."""
        return ModelParams(
            lam=8.0 * self.alpha / self.eps**2,
            delta=2.0 * self.beta / self.eps,
            f=1.0,
        )

    def slow_time(self, t):
        return 0.5 * self.eps * np.asarray(t)

    def fast_time(self, tau):
        return 2.0 * np.asarray(tau) / self.eps


def rhs_unperturbed(state: PhaseState, tau: float, params: ModelParams) -> Tuple[float, float]:
    """Vector field of the unperturbed resonance equations."""
    r, psi = state
    _require_finite(r, psi, tau)
    if tau <= 0:
        raise DomainError("the model is posed for tau > 0")
    return (
        r * math.sin(psi) - params.delta * r,
        r - params.lam * tau + params.f * math.cos(psi),
    )


def rhs_perturbed(
    state: PhaseState,
    tau: float,
    params: ModelParams,
    pv: PerturbationValues,
    mu: float,
) -> Tuple[float, float]:
    """Vector field with deterministic perturbations scaled by ``mu``."""
    r, psi = state
    xi, eta, zeta = pv
    _require_finite(r, psi, tau, xi, eta, zeta, mu)
    if tau <= 0:
        raise DomainError("the model is posed for tau > 0")
    if mu < 0:
        raise DomainError("mu must be nonnegative")
    return (
        (1.0 + mu * xi) * r * math.sin(psi) - params.delta * r,
        r - params.lam * tau + mu * zeta + (params.f + mu * eta) * math.cos(psi),
    )


def rhs_random(
    state: PhaseState,
    tau: float,
    params: ModelParams,
    pv: PerturbationValues,
) -> Tuple[float, float]:
    """Vector field driven by a realized random perturbation path.

    The perturbation values enter without a ``mu`` factor; their smallness
    is carried by the moving-average bound of the path's class.
    """
    return rhs_perturbed(state, tau, params, pv, 1.0)


def to_transformed(state: PhaseState, tau, params: ModelParams, ref: "SeriesCoeffs") -> TransformedState:
    """Map ``(r, psi)`` to the deviation ``(R, Psi)`` from the reference solution."""
    _require_positive_tau(tau)
    r_ref, psi_ref = ref.eval(tau)
    scale = np.sqrt(params.lam * np.asarray(tau, dtype=float))
    return TransformedState((state.r - r_ref) / scale, state.psi - psi_ref)


def from_transformed(tstate: TransformedState, tau, params: ModelParams, ref: "SeriesCoeffs") -> PhaseState:
    """Inverse of :func:`to_transformed`."""
    _require_positive_tau(tau)
    r_ref, psi_ref = ref.eval(tau)
    scale = np.sqrt(params.lam * np.asarray(tau, dtype=float))
    return PhaseState(r_ref + scale * tstate.R, psi_ref + tstate.Psi)


def rhs_transformed(tstate: TransformedState, tau, params: ModelParams, ref: "SeriesCoeffs") -> Tuple[float, float]:
    """Near-Hamiltonian vector field ``sqrt(lam tau) * (-dH/dPsi + F, dH/dR)``.

    ``(0, 0)`` is an exact equilibrium for any reference; the field agrees with
    the pushforward of :func:`rhs_unperturbed` up to the truncation error of
    ``ref``.
    """
    _require_positive_tau(tau)
    parts = _hamiltonian.evaluate(tstate.R, tstate.Psi, tau, params, ref)
    return (
        parts.scale * (-parts.H_Psi + parts.F),
        parts.scale * parts.H_R,
    )


def duffing_phase(t, dp: DuffingParams):
    """Chirped pump phase ``2 t + alpha t^2``."""
    t = np.asarray(t, dtype=float)
    return 2.0 * t + dp.alpha * t * t


def duffing_rhs(
    x: float,
    v: float,
    t: float,
    dp: DuffingParams,
    mu: float = 0.0,
    pert: Optional[Tuple[Callable[[float], float], Callable[[float], float]]] = None,
) -> Tuple[float, float]:
    """Parametrically pumped Duffing oscillator, optionally with amplitude/phase perturbations."""
    _require_finite(x, v, t, mu)
    amp = 1.0
    phase = 2.0 * t + dp.alpha * t * t
    if pert is not None and mu != 0.0:
        a_func, phi_func = pert
        amp += mu * a_func(t)
        phase += mu * phi_func(t)
    stiffness = 1.0 + dp.eps * amp * math.cos(phase)
    return v, -dp.beta * v - stiffness * x - dp.gamma * x**3


def duffing_envelope(r, dp: DuffingParams):
    """Fast-oscillation amplitude ``sqrt(kappa eps r)`` implied by the slow energy ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("energy r must be nonnegative")
    out = np.sqrt(dp.kappa * dp.eps * r)
    return float(out) if out.ndim == 0 else out
