"""Lyapunov analysis of the autoresonant equilibrium in shifted coordinates.

Near the minus-branch reference the transformed system is

    dR/dtau   = sqrt(lam tau) (-dH/dPsi + F + mu G)
    dPsi/dtau = sqrt(lam tau) ( dH/dR        + mu Q)

and ``V = H + (m/2) R Psi tau^-1/2`` is a Lyapunov function.  This module
evaluates ``H``, ``F``, ``V`` and ``dV/dtau`` with hand-differentiated
partials, and certifies the quadratic sandwich and decay inequalities by
dense grid sampling.  Certification here is sampling-based, not
interval-rigorous.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import _hamiltonian
from .asymptotics import Branch, SeriesCoeffs, leading_coeffs, reference_series
from .dynamics import ModelParams, PerturbationValues, TransformedState, _require_positive_tau
from .errors import DomainError

__all__ = [
    "hamiltonian",
    "non_hamiltonian_F",
    "lyapunov_V",
    "partials",
    "lyapunov_derivative",
    "perturbation_terms",
    "DomainBox",
    "GridSpec",
    "CertificateReport",
    "certify_domain",
    "Stability",
    "branch_eigenvalues",
    "classify_branch",
    "threshold_radius",
    "threshold_geometry",
]

SANDWICH_LOW = 0.25
SANDWICH_HIGH = 0.75
DECAY_FACTOR = 0.25  # dV/dtau <= -(m sqrt(lam) / 4)(R^2 + sigma Psi^2)
ELL_SAFETY = 1.1


def _split(tstate):
    R, Psi = tstate
    return np.asarray(R, dtype=float), np.asarray(Psi, dtype=float)


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def hamiltonian(tstate, tau, params: ModelParams, ref: SeriesCoeffs):
    """Hamiltonian ``H(R, Psi, tau)`` of the transformed system."""
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    return _out(_hamiltonian.evaluate(R, Psi, tau, params, ref).H)


def non_hamiltonian_F(tstate, tau, params: ModelParams, ref: SeriesCoeffs, printed: bool = False):
    """Dissipative part of the transformed system.

    ``F = -(R/sqrt(lam tau))[delta + (f-1) sin(Psi+Psi_ref)] - R/(2 tau sqrt(lam tau))``,
    the form obtained by pushing the resonance equations through the change
    of variables.  ``printed=True`` returns the variant whose last term is
    ``-R/(2 tau)``; it has the same leading asymptotics but does not
    reproduce the pushforward, so it is kept for comparison only.
    """
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    parts = _hamiltonian.evaluate(R, Psi, tau, params, ref)
    if printed:
        tau = np.asarray(tau, dtype=float)
        return _out(parts.F + 0.5 * R / (tau * parts.scale) - 0.5 * R / tau)
    return _out(parts.F)


class VPartials(NamedTuple):
    V: np.ndarray
    V_R: np.ndarray
    V_Psi: np.ndarray
    V_tau: np.ndarray


def _v_parts(R, Psi, tau, params, ref):
    parts = _hamiltonian.evaluate(R, Psi, tau, params, ref)
    m = params.m
    tau = np.asarray(tau, dtype=float)
    w = 0.5 * m / np.sqrt(tau)
    V = parts.H + w * R * Psi
    V_R = parts.H_R + w * Psi
    V_Psi = parts.H_Psi + w * R
    V_tau = parts.H_tau - 0.5 * w * R * Psi / tau
    return parts, VPartials(V, V_R, V_Psi, V_tau)


def lyapunov_V(tstate, tau, params: ModelParams, ref: SeriesCoeffs):
    """``V = H + (m/2) R Psi tau^-1/2`` with ``m = delta f / sqrt(lam)``."""
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    return _out(_v_parts(R, Psi, tau, params, ref)[1].V)


def partials(tstate, tau, params: ModelParams, ref: SeriesCoeffs) -> VPartials:
    """Analytic ``(V, dV/dR, dV/dPsi, dV/dtau)``."""
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    vp = _v_parts(R, Psi, tau, params, ref)[1]
    return VPartials(*(_out(x) for x in vp))


def perturbation_terms(tstate, tau, params: ModelParams, ref: SeriesCoeffs, pv: PerturbationValues):
    """``(G, Q)`` such that the perturbed field adds ``mu sqrt(lam tau) (G, Q)``.

    ``G = (R_ref + R sqrt(lam tau)) sin(Psi + Psi_ref) xi / (lam tau)`` and
    ``Q = (eta cos(Psi + Psi_ref) + zeta) / sqrt(lam tau)``; both follow from
    pushing the perturbed equations through the change of variables.
    """
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    tau = np.asarray(tau, dtype=float)
    r_ref, psi_ref = ref.eval(tau)
    lt = params.lam * tau
    scale = np.sqrt(lt)
    phase = Psi + psi_ref
    G = (r_ref + R * scale) * np.sin(phase) * pv.xi / lt
    Q = (pv.eta * np.cos(phase) + pv.zeta) / scale
    return _out(G), _out(Q)


def lyapunov_derivative(
    tstate,
    tau,
    params: ModelParams,
    ref: SeriesCoeffs,
    pv: Optional[PerturbationValues] = None,
    mu: float = 0.0,
):
    """Derivative of ``V`` along the transformed flow.

    ``dV/dtau = V_tau + sqrt(lam tau) [V_R (-H_Psi + F + mu G) + V_Psi (H_R + mu Q)]``.
    Without ``pv`` (or with ``mu = 0``) this is the unperturbed flow.
    """
    _require_positive_tau(tau)
    R, Psi = _split(tstate)
    parts, vp = _v_parts(R, Psi, tau, params, ref)
    dR = -parts.H_Psi + parts.F
    dPsi = parts.H_R
    if pv is not None and mu != 0.0:
        if mu < 0:
            raise DomainError("mu must be nonnegative")
        G, Q = perturbation_terms((R, Psi), tau, params, ref, pv)
        dR = dR + mu * G
        dPsi = dPsi + mu * Q
    return _out(vp.V_tau + parts.scale * (vp.V_R * dR + vp.V_Psi * dPsi))


# ---------------------------------------------------------------- certification


@dataclass(frozen=True)
class DomainBox:
    """Sampled region ``{rho < rho_max, tau_min < tau < tau_max}``."""

    rho_max: float
    tau_min: float
    tau_max: float

    def __post_init__(self):
        if not (self.rho_max > 0 and math.isfinite(self.rho_max)):
            raise DomainError(f"rho_max must be positive, got {self.rho_max}")
        if not 0 < self.tau_min < self.tau_max < math.inf:
            raise DomainError(f"need 0 < tau_min < tau_max, got {self.tau_min}, {self.tau_max}")


@dataclass(frozen=True)
class GridSpec:
    """Sampling density in (angle, rho, log tau) and the shrink budget."""

    n_angle: int = 64
    n_rho: int = 64
    n_tau: int = 32
    max_rounds: int = 8

    def __post_init__(self):
        if min(self.n_angle, self.n_rho, self.n_tau) < 1 or self.max_rounds < 1:
            raise DomainError("grid sizes and max_rounds must be positive")


@dataclass
class CertificateReport:
    """Outcome of a sampled certification run.

    ``sandwich_margins`` and ``decay_margin`` are worst cases of the slack
    divided by ``R^2 + sigma Psi^2``; positive means the inequality held at
    every sample.  ``witness`` records the sample with the largest
    ``dV/dtau`` when certification fails.
    """

    certified: bool
    rho0: float
    tau0: float
    tau_max: float
    ell: float
    decay_margin: float
    sandwich_margins: Tuple[float, float]
    samples: int
    rounds: int
    grid_spec: dict
    params: dict
    witness: Optional[dict] = None
    diagnosis: str = ""
    method: str = "dense grid sampling (not interval-rigorous)"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sandwich_margins"] = list(self.sandwich_margins)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _grid_points(box: DomainBox, grid: GridSpec):
    theta = 2.0 * np.pi * np.arange(grid.n_angle) / grid.n_angle
    rho = box.rho_max * np.arange(1, grid.n_rho + 1) / grid.n_rho
    taus = np.geomspace(box.tau_min, box.tau_max, grid.n_tau)
    th, rh = np.meshgrid(theta, rho, indexing="ij")
    return (rh * np.cos(th)).ravel(), (rh * np.sin(th)).ravel(), taus


def _chunk_stats(args):
    """Margins and extremes for one tau slice; pure, so chunks can run anywhere."""
    R, Psi, tau, params, ref = args
    sigma = params.sigma
    q = R * R + sigma * Psi * Psi
    parts, vp = _v_parts(R, Psi, tau, params, ref)
    dV = vp.V_tau + parts.scale * (vp.V_R * (-parts.H_Psi + parts.F) + vp.V_Psi * parts.H_R)
    low = (vp.V - SANDWICH_LOW * q) / q
    high = (SANDWICH_HIGH * q - vp.V) / q
    decay = (-DECAY_FACTOR * params.m * math.sqrt(params.lam) * q - dV) / q
    grad = np.abs(vp.V_R) + np.abs(vp.V_Psi)
    k = int(np.argmax(dV / q))
    return (
        float(low.min()),
        float(high.min()),
        float(decay.min()),
        float(grad.max()),
        (float(R[k]), float(Psi[k]), float(tau), float(dV[k])),
    )


def _evaluate_box(params, ref, box, grid, workers):
    R, Psi, taus = _grid_points(box, grid)
    jobs = [(R, Psi, float(t), params, ref) for t in taus]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(_chunk_stats, jobs))
    else:
        stats = [_chunk_stats(j) for j in jobs]
    # reductions in fixed chunk order
    low = min(s[0] for s in stats)
    high = min(s[1] for s in stats)
    decay = min(s[2] for s in stats)
    grad = max(s[3] for s in stats)
    worst = max((s[4] for s in stats), key=lambda w: w[3] / (w[0] ** 2 + params.sigma * w[1] ** 2))
    return low, high, decay, grad, worst, R.size * len(taus)


def certify_domain(
    params: ModelParams,
    ref: Optional[SeriesCoeffs] = None,
    box: DomainBox = DomainBox(0.4, 10.0, 1e5),
    grid: GridSpec = GridSpec(),
    workers: int = 1,
) -> CertificateReport:
    """Search for a box where the sandwich and decay inequalities hold at all samples.

    Starting from ``box``, each failed round halves ``rho_max`` and doubles
    ``tau_min`` (``tau_max`` is a fixed sampling cap), for at most
    ``grid.max_rounds`` rounds.  Failure is reported, not raised.
    """
    grid_dict = asdict(grid)
    if params.delta >= 1:
        raise DomainError("certification requires delta < 1")
    if params.m == 0.0:
        return CertificateReport(
            certified=False, rho0=math.nan, tau0=math.nan, tau_max=box.tau_max, ell=math.nan,
            decay_margin=0.0, sandwich_margins=(math.nan, math.nan), samples=0, rounds=0,
            grid_spec=grid_dict, params=params.as_dict(),
            diagnosis="m = delta f / sqrt(lambda) = 0: the decay inequality has zero margin",
        )
    if ref is None:
        ref = reference_series(params, 1, Branch.MINUS)

    current = box
    best_witness = None
    last = None
    total = 0
    for rnd in range(1, grid.max_rounds + 1):
        low, high, decay, grad, worst, n = _evaluate_box(params, ref, current, grid, workers)
        total += n
        last = (low, high, decay, grad)
        if best_witness is None or worst[3] > best_witness[3]:
            best_witness = worst
        if low > 0 and high > 0 and decay > 0:
            return CertificateReport(
                certified=True, rho0=current.rho_max, tau0=current.tau_min, tau_max=current.tau_max,
                ell=ELL_SAFETY * grad, decay_margin=decay, sandwich_margins=(low, high),
                samples=n, rounds=rnd, grid_spec=grid_dict, params=params.as_dict(),
                diagnosis="sandwich and decay inequalities hold at every sample",
            )
        tau_min = 2.0 * current.tau_min
        if tau_min >= current.tau_max:
            break
        current = DomainBox(0.5 * current.rho_max, tau_min, current.tau_max)

    low, high, decay, grad = last
    witness = None
    if best_witness is not None and best_witness[3] > 0:
        R, Psi, tau, dV = best_witness
        witness = {"R": R, "Psi": Psi, "tau": tau, "dV_dtau": dV}
    if params.f < 0:
        diagnosis = "f < 0: dV/dtau is positive near the equilibrium (unstable regime)"
    else:
        diagnosis = "no certified box within the shrink budget"
    return CertificateReport(
        certified=False, rho0=math.nan, tau0=math.nan, tau_max=box.tau_max, ell=ELL_SAFETY * grad,
        decay_margin=decay, sandwich_margins=(low, high), samples=total, rounds=grid.max_rounds,
        grid_spec=grid_dict, params=params.as_dict(), witness=witness, diagnosis=diagnosis,
    )


def threshold_radius(eps: float, params: ModelParams) -> float:
    """Inner radius ``eps sqrt(sigma / 6)`` from which trajectories cannot reach ``rho = eps``."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    return eps * math.sqrt(params.sigma / 6.0)


def threshold_geometry(params: ModelParams, ref: SeriesCoeffs, eps: float, taus, n_angle: int = 256, n_rho: int = 32):
    """Return ``(sup V on rho <= delta_eps, inf V on rho = eps)`` over the sampled ``taus``."""
    d_eps = threshold_radius(eps, params)
    theta = 2.0 * np.pi * np.arange(n_angle) / n_angle
    rho = d_eps * np.arange(0, n_rho + 1) / n_rho
    th, rh = np.meshgrid(theta, rho, indexing="ij")
    Ri, Pi = (rh * np.cos(th)).ravel(), (rh * np.sin(th)).ravel()
    Ro, Po = eps * np.cos(theta), eps * np.sin(theta)
    sup_in, inf_out = -math.inf, math.inf
    for t in np.atleast_1d(taus):
        sup_in = max(sup_in, float(np.max(lyapunov_V((Ri, Pi), float(t), params, ref))))
        inf_out = min(inf_out, float(np.min(lyapunov_V((Ro, Po), float(t), params, ref))))
    return sup_in, inf_out


# -------------------------------------------------------------- classification


class Stability(str, Enum):
    ASYMPTOTICALLY_STABLE = "asymptotically_stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


def branch_eigenvalues(params: ModelParams, branch="minus", tau: float = 1e3) -> np.ndarray:
    """Eigenvalues of the resonance equations linearized at ``(lam tau, psi_0)``.

    The Jacobian at the leading asymptotic point is
    ``[[0, lam tau cos psi_0], [1, -f delta]]``.
    """
    if not 0 <= params.delta < 1:
        raise DomainError(f"delta must lie in [0, 1), got {params.delta}")
    if params.delta == 0:
        psi0 = 0.0 if Branch(branch) is Branch.PLUS else math.pi
    else:
        psi0 = leading_coeffs(params, branch)[0]
    jac = np.array([[0.0, params.lam * tau * math.cos(psi0)], [1.0, -params.f * params.delta]])
    return np.linalg.eigvals(jac)


def classify_branch(params: ModelParams, branch="minus", tau: float = 1e3) -> Stability:
    """Stability class of an autoresonant branch.

    Minus branch: stable for ``f > 0``, unstable for ``f < 0``.  Plus branch:
    unstable when the linearization has an eigenvalue with positive real
    part.  ``delta = 0`` gives zero trace and is reported inconclusive.
    """
    if not 0 <= params.delta < 1:
        raise DomainError(f"delta must lie in [0, 1), got {params.delta}")
    if params.delta == 0:
        return Stability.INCONCLUSIVE
    br = Branch(branch)
    if br is Branch.MINUS:
        return Stability.ASYMPTOTICALLY_STABLE if params.f > 0 else Stability.UNSTABLE
    eig = branch_eigenvalues(params, br, tau)
    if np.max(eig.real) > 0:
        return Stability.UNSTABLE
    return Stability.INCONCLUSIVE
