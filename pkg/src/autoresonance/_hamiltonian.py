"""Closed forms of H, its analytic partials, and the non-Hamiltonian part F.

Differences such as ``cos(Psi + P) - cos(P)`` are rewritten with half-angle
identities so that the quantities stay accurate for ``rho`` down to ~1e-8.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

_SERIES_CUTOFF = 1e-3


def one_minus_cos(x):
    s = np.sin(0.5 * x)
    return 2.0 * s * s


def x_minus_sin(x):
    """``x - sin(x)`` without cancellation near zero."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    small = x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    return np.where(np.abs(x) < _SERIES_CUTOFF, small, x - np.sin(x))


class Parts(NamedTuple):
    H: np.ndarray
    H_R: np.ndarray
    H_Psi: np.ndarray
    H_tau: np.ndarray
    F: np.ndarray
    scale: np.ndarray  # sqrt(lam tau)
    r_ref: np.ndarray
    psi_ref: np.ndarray


def evaluate(R, Psi, tau, params, ref) -> Parts:
    R = np.asarray(R, dtype=float)
    Psi = np.asarray(Psi, dtype=float)
    tau = np.asarray(tau, dtype=float)
    lam, delta, f = params.lam, params.delta, params.f

    r_ref, psi_ref = ref.eval(tau)
    dr_ref, dpsi_ref = ref.derivative(tau)

    lt = lam * tau
    scale = np.sqrt(lt)
    q = r_ref / lt
    dq = dr_ref / lt - r_ref / (lam * tau * tau)

    s0 = np.sin(psi_ref)
    c0 = np.cos(psi_ref)
    omc = one_minus_cos(Psi)
    sp = np.sin(Psi)

    # cos(Psi+P) - cos P + Psi sin P
    pot = s0 * x_minus_sin(Psi) - c0 * omc
    # cos(Psi+P) - cos P
    dcos = -c0 * omc - s0 * sp
    # sin P - sin(Psi+P)
    dsin = s0 * omc - c0 * sp
    sin_full = np.sin(Psi + psi_ref)

    H = 0.5 * R * R + q * pot + f * R / scale * dcos
    H_R = R + f / scale * dcos
    H_Psi = q * dsin - f * R / scale * sin_full
    # d/dtau of pot at fixed Psi: dsin*P' + Psi cos(P) P'
    dpot = (dsin + Psi * c0) * dpsi_ref
    H_tau = dq * pot + q * dpot - f * R / (2.0 * tau * scale) * dcos + f * R / scale * dsin * dpsi_ref
    # the rescaling of R contributes -R/(2 tau) to dR/dtau, i.e. -R/(2 tau sqrt(lam tau)) here
    F = -R / scale * (delta + (f - 1.0) * sin_full) - 0.5 * R / (tau * scale)
    return Parts(H, H_R, H_Psi, H_tau, F, scale, r_ref, psi_ref)
