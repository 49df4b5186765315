"""Power-series asymptotics of the growing-energy (autoresonant) solutions.

Both branches have the form

    R(tau)   = lam tau + sum_j r_j tau^-j
    Psi(tau) =           sum_j psi_j tau^-j

with ``sin(psi_0) = delta``.  Substituting into the resonance equations and
matching powers of ``1/tau`` gives, at every order ``n >= 1``, a 2x2 linear
system in ``(r_n, psi_n)`` whose matrix ``[[0, lam cos psi_0], [1, -f sin psi_0]]``
is the same for all orders.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple

import numpy as np

from .dynamics import ModelParams, PhaseState
from .errors import DegenerateParametersError, DomainError

__all__ = [
    "Branch",
    "SeriesCoeffs",
    "leading_coeffs",
    "extend_coeffs",
    "reference_series",
    "eval_reference",
    "residual",
    "MAX_ORDER",
]

MAX_ORDER = 8
CONDITIONING_LIMIT = 1e8


class Branch(str, Enum):
    PLUS = "plus"
    MINUS = "minus"


def _branch(branch) -> Branch:
    try:
        return Branch(branch)
    except ValueError:
        raise DomainError(f"unknown branch {branch!r}") from None


def _horner(coeffs: Sequence[float], s):
    acc = np.zeros_like(s)
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


@dataclass(frozen=True)
class SeriesCoeffs:
    """Truncated coefficients of one branch.

    ``psi_coeffs`` holds ``psi_0 .. psi_J``.  ``r_coeffs`` normally has the same
    length; the reference used in the change of variables keeps one term
    fewer in ``r`` (``lam tau + f sigma`` with the phase through ``1/tau``).
    """

    branch: Branch
    r_coeffs: Tuple[float, ...]
    psi_coeffs: Tuple[float, ...]
    params: ModelParams
    warnings: Tuple[str, ...] = field(default=(), compare=False)

    @property
    def order(self) -> int:
        return len(self.psi_coeffs) - 1

    def eval(self, tau):
        """Return ``(R(tau), Psi(tau))`` by Horner evaluation in ``1/tau``."""
        tau = np.asarray(tau, dtype=float)
        s = 1.0 / tau
        r = self.params.lam * tau + _horner(self.r_coeffs, s)
        psi = _horner(self.psi_coeffs, s)
        if r.ndim == 0:
            return float(r), float(psi)
        return r, psi

    def derivative(self, tau):
        """Return ``(dR/dtau, dPsi/dtau)`` of the truncated series."""
        tau = np.asarray(tau, dtype=float)
        s = 1.0 / tau
        # d/dtau sum c_j s^j = -s^2 sum j c_j s^(j-1)
        dr_poly = [j * c for j, c in enumerate(self.r_coeffs)][1:]
        dpsi_poly = [j * c for j, c in enumerate(self.psi_coeffs)][1:]
        dr = self.params.lam - s * s * _horner(dr_poly, s)
        dpsi = -s * s * _horner(dpsi_poly, s)
        if dr.ndim == 0:
            return float(dr), float(dpsi)
        return dr, dpsi

    def truncate(self, order: int) -> "SeriesCoeffs":
        if order < 0 or order > self.order:
            raise DomainError(f"cannot truncate order {self.order} series to {order}")
        return SeriesCoeffs(
            self.branch,
            self.r_coeffs[: order + 1],
            self.psi_coeffs[: order + 1],
            self.params,
        )

    def to_dict(self) -> dict:
        return {
            "branch": self.branch.value,
            "order": self.order,
            "r_coeffs": list(self.r_coeffs),
            "psi_coeffs": list(self.psi_coeffs),
            "params": self.params.as_dict(),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SeriesCoeffs":
        p = data["params"]
        return cls(
            Branch(data["branch"]),
            tuple(float(c) for c in data["r_coeffs"]),
            tuple(float(c) for c in data["psi_coeffs"]),
            ModelParams(p["lambda"], p["delta"], p["f"]),
            tuple(data.get("warnings", ())),
        )


def _check_delta(params: ModelParams) -> None:
    if params.delta == 1.0:
        raise DegenerateParametersError(
            "delta = 1: cos(psi_0) = 0 makes the order-matching system singular"
        )
    if not 0.0 < params.delta < 1.0:
        raise DomainError(f"two distinct autoresonant branches need 0 < delta < 1, got {params.delta}")


def leading_coeffs(params: ModelParams, branch="minus") -> Tuple[float, float, float, float]:
    """Closed-form ``(psi_0, r_0, psi_1, r_1)`` of the requested branch."""
    _check_delta(params)
    base = math.asin(params.delta)
    psi0 = base if _branch(branch) is Branch.PLUS else math.pi - base
    c0 = math.cos(psi0)
    return psi0, -params.f * c0, 1.0 / c0, params.f * math.tan(psi0)


def _sin_cos_of_correction(psi: Sequence[float], n: int):
    """Series of ``sin(D)``, ``cos(D)`` through ``s^n`` for ``D = sum_{j>=1} psi_j s^j``."""
    d = np.zeros(n + 1)
    d[1 : len(psi)] = psi[1 : n + 1]
    sin_d = np.zeros(n + 1)
    cos_d = np.zeros(n + 1)
    cos_d[0] = 1.0
    power = np.zeros(n + 1)
    power[0] = 1.0
    fact = 1.0
    for p in range(1, n + 1):
        power = np.convolve(power, d)[: n + 1]
        fact *= p
        term = power / fact
        if p % 2:
            sin_d += term if p % 4 == 1 else -term
        else:
            cos_d += term if p % 4 == 0 else -term
    return sin_d, cos_d


def extend_coeffs(params: ModelParams, branch="minus", J: int = 1) -> SeriesCoeffs:
    """Coefficients through order ``J`` by order-by-order power matching."""
    if not 0 <= J <= MAX_ORDER:
        raise DomainError(f"order must be in [0, {MAX_ORDER}], got {J}")
    br = _branch(branch)
    psi0, r0, psi1, r1 = leading_coeffs(params, br)
    lam, f = params.lam, params.f
    s0, c0 = math.sin(psi0), math.cos(psi0)
    if c0 == 0.0:
        raise DegenerateParametersError("cos(psi_0) = 0")
    # [[0, lam c0], [1, -f s0]] @ (r_n, psi_n) = (b1, b2)
    r = [r0, r1]
    psi = [psi0, psi1]
    for n in range(2, J + 1):
        sin_d, cos_d = _sin_cos_of_correction(psi, n)
        # psi_n set to zero inside sin_d/cos_d; its linear contribution is added via the matrix
        S = s0 * cos_d + c0 * sin_d
        S[0] -= params.delta
        C = c0 * cos_d - s0 * sin_d
        b1 = -(n - 2) * r[n - 2] - lam * S[n] - sum(r[n - 1 - i] * S[i] for i in range(1, n))
        b2 = -(n - 1) * psi[n - 1] - f * C[n]
        psi_n = b1 / (lam * c0)
        psi.append(psi_n)
        r.append(b2 + f * s0 * psi_n)
    r, psi = r[: J + 1], psi[: J + 1]
    notes = []
    big = max(abs(c) for c in r + psi)
    if big > CONDITIONING_LIMIT:
        msg = f"coefficient magnitude {big:.3g} exceeds {CONDITIONING_LIMIT:g}; delta may be close to 1"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    return SeriesCoeffs(br, tuple(map(float, r)), tuple(map(float, psi)), params, tuple(notes))


def reference_series(params: ModelParams, order: int = 1, branch="minus") -> SeriesCoeffs:
    """Reference solution used by the change of variables.

    The phase keeps terms through ``tau^-order`` and the amplitude through
    ``tau^-(order-1)``; for ``order=1`` this is ``R = lam tau + f sigma``,
    ``Psi = pi - arcsin(delta) - tau^-1 / sigma``.
    """
    if order < 1:
        raise DomainError("reference order must be at least 1")
    full = extend_coeffs(params, branch, order)
    return SeriesCoeffs(full.branch, full.r_coeffs[:order], full.psi_coeffs, params, full.warnings)


def eval_reference(series: SeriesCoeffs, tau) -> PhaseState:
    if np.any(np.asarray(tau) <= 0):
        raise DomainError("tau must be positive")
    return PhaseState(*series.eval(tau))


def residual(series: SeriesCoeffs, tau, precision: int | None = None):
    """Defect of the truncated series in the unperturbed equations.

    Returns ``(dR/dtau - rhs_r, dPsi/dtau - rhs_psi)`` evaluated on the series.
    Double precision bottoms out near 1e-16 in the phase equation; pass
    ``precision`` (decimal digits) to evaluate the same float coefficients
    with mpmath instead.
    """
    if np.any(np.asarray(tau) <= 0):
        raise DomainError("tau must be positive")
    if precision is not None:
        return _residual_mp(series, tau, precision)
    tau = np.asarray(tau, dtype=float)
    p = series.params
    s = 1.0 / tau
    # r - lam tau without cancellation
    excess = _horner(series.r_coeffs, s)
    r = p.lam * tau + excess
    psi = _horner(series.psi_coeffs, s)
    dr, dpsi = series.derivative(tau)
    res_r = dr - (r * np.sin(psi) - p.delta * r)
    res_psi = dpsi - (excess + p.f * np.cos(psi))
    return res_r, res_psi


def _residual_mp(series: SeriesCoeffs, tau, precision: int):
    import mpmath

    p = series.params
    out_r, out_psi = [], []
    with mpmath.workdps(precision):
        lam, delta, f = (mpmath.mpf(x) for x in (p.lam, p.delta, p.f))
        rc = [mpmath.mpf(c) for c in series.r_coeffs]
        pc = [mpmath.mpf(c) for c in series.psi_coeffs]
        for t in np.atleast_1d(np.asarray(tau, dtype=float)):
            s = 1 / mpmath.mpf(t)
            excess = sum(c * s**j for j, c in enumerate(rc))
            psi = sum(c * s**j for j, c in enumerate(pc))
            dr = lam - sum(j * c * s ** (j + 1) for j, c in enumerate(rc))
            dpsi = -sum(j * c * s ** (j + 1) for j, c in enumerate(pc))
            r = lam / s + excess
            out_r.append(float(dr - (r * mpmath.sin(psi) - delta * r)))
            out_psi.append(float(dpsi - (excess + f * mpmath.cos(psi))))
    if np.ndim(tau) == 0:
        return out_r[0], out_psi[0]
    return np.array(out_r), np.array(out_psi)
