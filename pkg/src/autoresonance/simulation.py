"""Experiments on the resonance equations: escape runs, basins, Monte Carlo, Duffing.

Structured problems (no perturbation, Example-1 style deterministic
triples, indicator-based random paths) are integrated by the compiled
kernel; anything else falls back to the generic integrator in
:mod:`autoresonance.integrate`.  Both paths share one step controller.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from .asymptotics import SeriesCoeffs, reference_series
from .dynamics import (
    DuffingParams,
    ModelParams,
    PhaseState,
    TransformedState,
    duffing_envelope,
    rhs_perturbed,
    rhs_transformed,
)
from .errors import ConfigError, DomainError, FitError, StiffnessError
from .integrate import (
    COMPLETED,
    ESCAPED,
    STEP_LIMIT,
    VALIDITY_VIOLATION,
    IntegratorConfig,
    Trajectory,
    integrate,
)
from .perturbations import (
    ClassSpec,
    DeterministicPert,
    Distribution,
    JumpTrainSpec,
    RandomPertPath,
    StructuredForm,
    sample_jump_train,
    sample_single_jump,
)
from .serialization import write_csv

__all__ = [
    "NORMS",
    "PhaseProblem",
    "deviation_norm",
    "integrate_until_escape",
    "integrate_transformed",
    "write_trajectory_csv",
    "CaptureCriterion",
    "BasinGrid",
    "BasinCell",
    "BasinResult",
    "classify_initial",
    "basin_scan",
    "DecayFit",
    "decay_rate_fit",
    "JumpTrainFactory",
    "SingleJumpFactory",
    "ZeroFactory",
    "MonteCarloConfig",
    "MonteCarloReport",
    "trial_seeds",
    "wilson_interval",
    "monte_carlo_escape",
    "DuffingReport",
    "duffing_initial_slow_state",
    "duffing_compare",
]

NORMS = {"tau": 0, "lambda_tau": 1, "euclidean": 2}
_STATUS = {
    kernels.COMPLETED: COMPLETED,
    kernels.ESCAPED: ESCAPED,
    kernels.VALIDITY_VIOLATION: VALIDITY_VIOLATION,
    kernels.STEP_LIMIT: STEP_LIMIT,
}


def _norm_code(norm: str) -> int:
    try:
        return NORMS[norm]
    except KeyError:
        raise ConfigError(f"unknown deviation norm {norm!r}; choose one of {sorted(NORMS)}") from None


def deviation_norm(state: PhaseState, tau, ref: SeriesCoeffs, norm: str = "tau"):
    """Weighted distance from the reference solution.

    ``"tau"`` (default) is ``|r - R_ref| tau^-1/2 + |psi - Psi_ref|``;
    ``"lambda_tau"`` weights the amplitude by ``(lam tau)^-1/2``;
    ``"euclidean"`` is ``rho`` of the transformed state.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("tau must be positive")
    code = _norm_code(norm)
    r_ref, psi_ref = ref.eval(tau)
    dr = np.asarray(state[0]) - r_ref
    dpsi = np.asarray(state[1]) - psi_ref
    lam = ref.params.lam
    if code == 0:
        out = np.abs(dr) / np.sqrt(tau) + np.abs(dpsi)
    elif code == 1:
        out = np.abs(dr) / np.sqrt(lam * tau) + np.abs(dpsi)
    else:
        out = np.hypot(dr / np.sqrt(lam * tau), dpsi)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PhaseProblem:
    """Resonance equations with an optional perturbation.

    Deterministic triples are scaled by ``mu``; random paths enter unscaled.
    """

    params: ModelParams
    pert: Optional[Union[DeterministicPert, RandomPertPath]] = None
    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0 or not math.isfinite(self.mu):
            raise DomainError("mu must be a nonnegative finite number")

    @property
    def structured(self) -> Optional[StructuredForm]:
        if self.pert is None:
            return StructuredForm(base=0.0)
        return getattr(self.pert, "structured", None)

    @property
    def scale(self) -> float:
        return 1.0 if isinstance(self.pert, RandomPertPath) else self.mu

    def rhs(self, tau, y):
        if self.pert is None:
            pv = (0.0, 0.0, 0.0)
            return rhs_perturbed(PhaseState(y[0], y[1]), tau, self.params, pv, 0.0)
        pv = self.pert(y[0], y[1], tau)
        return rhs_perturbed(PhaseState(y[0], y[1]), tau, self.params, tuple(map(float, pv)), self.scale)


def _kernel_phase(problem: PhaseProblem, form: StructuredForm, initial, tau0, tau1, eps, ref, norm, cfg, record):
    p = problem.params
    seg = form.segments
    lo = [s[0] for s in seg]
    hi = [s[1] for s in seg]
    val = [s[2] for s in seg]
    breaks = sorted(set(lo) | set(hi))
    rr = ref.r_coeffs if ref is not None else (0.0,)
    rp = ref.psi_coeffs if ref is not None else (0.0,)
    cxi, ceta, czeta = form.coef
    pxi, peta, pzeta = form.powers
    pmu = problem.scale if problem.pert is not None else 0.0
    out = kernels.integrate_phase(
        float(initial[0]), float(initial[1]), float(tau0), float(tau1),
        p.lam, p.delta, p.f,
        pmu, cxi, ceta, czeta, pxi, peta, pzeta, form.base,
        lo, hi, val, breaks,
        rr, rp, float(eps), _norm_code(norm),
        *cfg.kernel_args(), bool(record),
    )
    status, t, r, psi, esc, nsteps, rec = out
    if status == kernels.STIFF:
        raise StiffnessError(f"step size underflow at tau={t:.17g}")
    if rec is not None:
        times = rec[0]
        states = np.column_stack((rec[1], rec[2]))
        derivs = np.column_stack((rec[3], rec[4]))
    else:
        times = np.array([tau0, t])
        states = np.array([[initial[0], initial[1]], [r, psi]], dtype=float)
        derivs = None
    return Trajectory(
        times=times,
        states=states,
        status=_STATUS[status],
        escape_time=None if math.isnan(esc) else float(esc),
        derivs=derivs,
        n_steps=int(nsteps),
        meta={"backend": kernels.BACKEND},
    )


def integrate_until_escape(
    rhs: Union[PhaseProblem, Callable],
    initial: Sequence[float],
    tau0: float,
    horizon: float,
    epsilon: float,
    ref: Optional[SeriesCoeffs],
    cfg: IntegratorConfig = IntegratorConfig(),
    norm: str = "tau",
    record: bool = True,
    breakpoints: Sequence[float] = (),
) -> Trajectory:
    """Integrate until the deviation norm exceeds ``epsilon`` or ``tau`` reaches ``horizon``.

    ``rhs`` is a :class:`PhaseProblem` (kernel path when its perturbation is
    structured) or any callable ``rhs(tau, y)``.  Escape is tested at every
    accepted step and located by bisection to 1e-6; ``r < 0`` ends the run
    with status ``validity_violation``.  ``epsilon = inf`` disables escape.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not horizon > tau0:
        raise DomainError(f"horizon {horizon} must exceed tau0 {tau0}")
    if not tau0 > 0:
        raise DomainError("tau0 must be positive")
    if math.isfinite(epsilon) and ref is None:
        raise DomainError("a reference series is needed for escape detection")
    _norm_code(norm)
    if isinstance(rhs, PhaseProblem):
        form = rhs.structured
        if form is not None:
            return _kernel_phase(rhs, form, initial, tau0, horizon, epsilon, ref, norm, cfg, record)
        fun = rhs.rhs
    else:
        fun = rhs

    escape = None
    if math.isfinite(epsilon):
        def escape(t, y):
            return deviation_norm(PhaseState(y[0], y[1]), t, ref, norm) > epsilon

    traj = integrate(
        fun, initial, tau0, horizon, cfg,
        escape=escape,
        valid=lambda t, y: y[0] >= 0.0,
        breakpoints=breakpoints,
    )
    traj.meta["backend"] = "generic"
    if not record:
        traj = Trajectory(
            times=traj.times[[0, -1]], states=traj.states[[0, -1]], status=traj.status,
            escape_time=traj.escape_time, derivs=None, n_steps=traj.n_steps, meta=traj.meta,
        )
    return traj


def integrate_transformed(
    params: ModelParams,
    ref: SeriesCoeffs,
    initial: TransformedState,
    tau0: float,
    tau1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate the near-Hamiltonian system for ``(R, Psi)`` directly."""

    def fun(t, y):
        return rhs_transformed(TransformedState(y[0], y[1]), t, params, ref)

    return integrate(fun, initial, tau0, tau1, cfg, t_eval=t_eval)


def write_trajectory_csv(traj: Trajectory, path, ref: SeriesCoeffs, norm: str = "tau") -> None:
    """Columns ``tau, r, psi, deviation_norm, status``; the last row carries the final status."""
    dev = deviation_norm((traj.states[:, 0], traj.states[:, 1]), traj.times, ref, norm)
    n = len(traj.times)
    rows = (
        (traj.times[i], traj.states[i, 0], traj.states[i, 1], dev[i], traj.status if i == n - 1 else "running")
        for i in range(n)
    )
    write_csv(path, ["tau", "r", "psi", "deviation_norm", "status"], rows)


def _map(fn, items, workers: int):
    """Ordered map; the result never depends on ``workers``."""
    if workers > 1 and len(items) > 1:
        chunk = max(1, len(items) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=chunk))
    return [fn(x) for x in items]


# ------------------------------------------------------------------------ basins


@dataclass(frozen=True)
class CaptureCriterion:
    """Captured iff ``r/(lam tau_max)`` lies in ``[ratio_lo, ratio_hi]`` and the
    wrapped phase offset from ``psi_0`` of the minus branch is below ``phase_window``."""

    ratio_lo: float = 0.8
    ratio_hi: float = 1.2
    phase_window: float = math.pi / 2

    def __post_init__(self):
        if not 0 <= self.ratio_lo < self.ratio_hi:
            raise ConfigError("capture criterion needs 0 <= ratio_lo < ratio_hi")
        if not 0 < self.phase_window <= math.pi:
            raise ConfigError("phase_window must lie in (0, pi]")


@dataclass(frozen=True)
class BasinGrid:
    r_min: float
    r_max: float
    n_r: int
    psi_min: float
    psi_max: float
    n_psi: int

    def __post_init__(self):
        if self.n_r < 1 or self.n_psi < 1:
            raise ConfigError("basin grid needs at least one point per axis")
        if self.r_min < 0 or self.r_max < self.r_min:
            raise ConfigError("basin grid needs 0 <= r_min <= r_max")
        if self.psi_max < self.psi_min:
            raise ConfigError("basin grid needs psi_min <= psi_max")

    def points(self) -> List[Tuple[float, float]]:
        rs = np.linspace(self.r_min, self.r_max, self.n_r)
        ps = np.linspace(self.psi_min, self.psi_max, self.n_psi)
        return [(float(r), float(p)) for r in rs for p in ps]


@dataclass(frozen=True)
class BasinCell:
    r0: float
    psi0: float
    cls: str  # captured | bounded | failed
    r_final: float
    psi_final: float
    status: str


@dataclass
class BasinResult:
    cells: List[BasinCell]
    tau_max: float
    tau_init: float
    criterion: CaptureCriterion

    def counts(self) -> dict:
        out = {"captured": 0, "bounded": 0, "failed": 0}
        for c in self.cells:
            out[c.cls] += 1
        return out

    def to_csv(self, path) -> None:
        write_csv(path, ["r0", "psi0", "class", "r_final"], ((c.r0, c.psi0, c.cls, c.r_final) for c in self.cells))


def _wrap(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _classify(args) -> BasinCell:
    params, r0, psi0, tau_init, tau_max, crit, cfg = args
    problem = PhaseProblem(params)
    try:
        traj = integrate_until_escape(problem, (r0, psi0), tau_init, tau_max, math.inf, None, cfg, record=False)
    except StiffnessError:
        return BasinCell(r0, psi0, "failed", math.nan, math.nan, "stiff")
    r, psi = (float(v) for v in traj.final_state)
    if traj.status != COMPLETED or not (math.isfinite(r) and math.isfinite(psi)):
        return BasinCell(r0, psi0, "failed", r, psi, traj.status)
    psi_minus = math.pi - math.asin(min(params.delta, 1.0))
    ratio = r / (params.lam * tau_max)
    captured = crit.ratio_lo <= ratio <= crit.ratio_hi and abs(_wrap(psi - psi_minus)) < crit.phase_window
    return BasinCell(r0, psi0, "captured" if captured else "bounded", r, psi, traj.status)


def classify_initial(
    params: ModelParams,
    r0: float,
    psi0: float,
    tau_max: float = 100.0,
    criterion: CaptureCriterion = CaptureCriterion(),
    tau_init: float = 0.01,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> BasinCell:
    """Integrate the unperturbed equations from ``(r0, psi0)`` at ``tau_init`` and classify."""
    if r0 < 0:
        raise DomainError("r0 must be nonnegative")
    return _classify((params, float(r0), float(psi0), tau_init, tau_max, criterion, cfg))


def basin_scan(
    params: ModelParams,
    grid: Union[BasinGrid, Sequence[Tuple[float, float]]],
    tau_max: float = 100.0,
    criterion: CaptureCriterion = CaptureCriterion(),
    tau_init: float = 0.01,
    cfg: IntegratorConfig = IntegratorConfig(),
    workers: int = 1,
) -> BasinResult:
    """Classify every initial point of ``grid`` as captured, bounded or failed."""
    if not tau_max > tau_init > 0:
        raise DomainError("need tau_max > tau_init > 0")
    points = grid.points() if isinstance(grid, BasinGrid) else [(float(r), float(p)) for r, p in grid]
    if any(r < 0 for r, _ in points):
        raise DomainError("initial amplitudes must be nonnegative")
    jobs = [(params, r, p, tau_init, tau_max, criterion, cfg) for r, p in points]
    return BasinResult(_map(_classify, jobs, workers), tau_max, tau_init, criterion)


# -------------------------------------------------------------------- decay fits


@dataclass(frozen=True)
class DecayFit:
    rate: float  # fitted l in rho ~ exp(-l tau)
    intercept: float
    residual: float  # RMS of log-rho residuals
    n: int


def decay_rate_fit(traj: Trajectory, window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """Least-squares slope of ``log rho`` against ``tau`` for a transformed trajectory."""
    t = np.asarray(traj.times, dtype=float)
    st = np.asarray(traj.states, dtype=float)
    mask = np.ones_like(t, dtype=bool) if window is None else (t >= window[0]) & (t <= window[1])
    t, st = t[mask], st[mask]
    if t.size < 10:
        raise FitError(f"decay fit needs at least 10 samples in the window, got {t.size}")
    rho = np.hypot(st[:, 0], st[:, 1])
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
        raise FitError("decay fit needs positive finite rho samples")
    A = np.column_stack((t, np.ones_like(t)))
    coef, *_ = np.linalg.lstsq(A, np.log(rho), rcond=None)
    resid = np.log(rho) - A @ coef
    return DecayFit(rate=float(-coef[0]), intercept=float(coef[1]), residual=float(np.sqrt(np.mean(resid**2))), n=int(t.size))


# ------------------------------------------------------------------ Monte Carlo


@dataclass(frozen=True)
class JumpTrainFactory:
    """Jump-train paths (``xi = eta = J_N``, ``zeta = tau J_N``) of width ``mu``."""

    N: int
    jump_dist: Distribution
    offset: float = 0.0

    @property
    def class_spec(self) -> ClassSpec:
        return ClassSpec(0.0, 0.0, 1.0, max(1e-300, 6.0 * self.jump_dist.mean_abs()), "random")

    def __call__(self, seed: int, mu: float) -> RandomPertPath:
        return sample_jump_train(JumpTrainSpec(self.N, self.jump_dist, mu, self.offset), seed)

    def to_dict(self) -> dict:
        return {"kind": "jump_train", "N": self.N, "jump_dist": self.jump_dist.to_dict(), "offset": self.offset}


@dataclass(frozen=True)
class SingleJumpFactory:
    """Single-jump paths (``xi = J``, ``eta = zeta = tau J``)."""

    omega_dist: Distribution
    jump_dist: Distribution

    @property
    def class_spec(self) -> ClassSpec:
        return ClassSpec(0.0, 1.0, 1.0, max(1e-300, 3.0 * self.jump_dist.mean_abs()), "random")

    def __call__(self, seed: int, mu: float) -> RandomPertPath:
        return sample_single_jump(self.omega_dist, self.jump_dist, mu, seed)

    def to_dict(self) -> dict:
        return {"kind": "single_jump", "omega_dist": self.omega_dist.to_dict(), "jump_dist": self.jump_dist.to_dict()}


@dataclass(frozen=True)
class ZeroFactory:
    @property
    def class_spec(self) -> ClassSpec:
        return ClassSpec(-0.5, 0.0, 0.0, 1.0, "random")

    def __call__(self, seed: int, mu: float) -> None:
        return None

    def to_dict(self) -> dict:
        return {"kind": "zero"}


@dataclass(frozen=True)
class MonteCarloConfig:
    """Escape experiment over ``(tau0, tau0 + tau0 mu^-kappa)``.

    Every trial starts at ``tau0`` from the reference shifted by
    ``initial_offset`` in transformed coordinates ``(R, Psi)``.
    """

    n_trials: int
    mu: float
    kappa: float
    epsilon: float
    tau0: float
    seed: int
    params: ModelParams
    pert: Union[JumpTrainFactory, SingleJumpFactory, ZeroFactory] = ZeroFactory()
    ref_order: int = 1
    norm: str = "tau"
    initial_offset: Tuple[float, float] = (0.0, 0.0)
    integrator: IntegratorConfig = IntegratorConfig()

    def __post_init__(self):
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ConfigError("n_trials must be a positive integer")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        kappa0 = self.pert.class_spec.kappa0
        if not 0 < self.kappa < kappa0:
            raise ConfigError(f"kappa must lie in (0, kappa0={kappa0}), got {self.kappa}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.tau0 > 0:
            raise ConfigError("tau0 must be positive")
        _norm_code(self.norm)

    @property
    def horizon(self) -> float:
        """Interval length ``T_mu = tau0 mu^-kappa``."""
        return self.tau0 * self.mu ** (-self.kappa)

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials, "mu": self.mu, "kappa": self.kappa, "epsilon": self.epsilon,
            "tau0": self.tau0, "seed": self.seed, "params": self.params.as_dict(),
            "pert": self.pert.to_dict(), "ref_order": self.ref_order, "norm": self.norm,
            "initial_offset": list(self.initial_offset), "integrator": self.integrator.to_dict(),
        }


@dataclass
class MonteCarloReport:
    n_trials: int
    n_escaped: int
    n_failed: int
    escape_prob: float
    wilson_ci_95: Tuple[float, float]
    horizon: float
    tau_end: float
    seeds: List[int]
    escaped: List[bool]
    escape_times: List[Optional[float]]
    statuses: List[str]
    nus: List[float]
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "results": {
                "n_trials": self.n_trials, "n_escaped": self.n_escaped, "n_failed": self.n_failed,
                "escape_prob": self.escape_prob, "wilson_ci_95": list(self.wilson_ci_95),
                "horizon": self.horizon, "tau_end": self.tau_end,
            },
            "trials": {
                "seeds": self.seeds, "escaped": self.escaped, "escape_times": self.escape_times,
                "statuses": self.statuses, "nu": self.nus,
            },
        }


def trial_seeds(master: int, n: int) -> List[int]:
    """Independent per-trial seeds; trial ``k`` depends only on ``(master, k)``."""
    return [int(s.generate_state(1, dtype=np.uint64)[0]) for s in np.random.SeedSequence(master).spawn(n)]


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> Tuple[float, float]:
    if n <= 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return (lo, hi)


def _mc_trial(args):
    params, ref, factory, mu, seed, tau0, tau_end, eps, norm, initial, cfg = args
    path = factory(seed, mu)
    problem = PhaseProblem(params, path, 1.0 if path is not None else 0.0)
    try:
        traj = integrate_until_escape(problem, initial, tau0, tau_end, eps, ref, cfg, norm, record=False)
        status = traj.status
        esc = traj.escape_time
    except StiffnessError:
        status, esc = "stiff", None
    return status, esc, (path.nu if path is not None else 0.0)


def monte_carlo_escape(mc: MonteCarloConfig, pert_factory=None, workers: int = 1) -> MonteCarloReport:
    """Escape fraction over independent perturbation paths with a Wilson 95% interval.

    Trials that end in a numerical failure or leave the model's validity
    domain are counted in ``n_failed`` and excluded from the fraction.
    """
    factory = pert_factory if pert_factory is not None else mc.pert
    params = mc.params
    ref = reference_series(params, mc.ref_order)
    r_ref, psi_ref = ref.eval(mc.tau0)
    R0, P0 = mc.initial_offset
    initial = (r_ref + math.sqrt(params.lam * mc.tau0) * R0, psi_ref + P0)
    tau_end = mc.tau0 + mc.horizon
    seeds = trial_seeds(mc.seed, int(mc.n_trials))
    jobs = [
        (params, ref, factory, mc.mu, s, mc.tau0, tau_end, mc.epsilon, mc.norm, initial, mc.integrator)
        for s in seeds
    ]
    results = _map(_mc_trial, jobs, workers)
    statuses = [r[0] for r in results]
    escaped = [s == ESCAPED for s in statuses]
    failed = sum(s not in (ESCAPED, COMPLETED) for s in statuses)
    valid = len(results) - failed
    k = sum(escaped)
    prob = k / valid if valid else math.nan
    return MonteCarloReport(
        n_trials=int(mc.n_trials),
        n_escaped=k,
        n_failed=failed,
        escape_prob=prob,
        wilson_ci_95=wilson_interval(k, valid),
        horizon=mc.horizon,
        tau_end=tau_end,
        seeds=seeds,
        escaped=escaped,
        escape_times=[r[1] for r in results],
        statuses=statuses,
        nus=[r[2] for r in results],
        config=mc.to_dict(),
    )


# ----------------------------------------------------------------------- Duffing


@dataclass
class DuffingReport:
    """Envelope comparison between the oscillator and the averaged equations."""

    rel_sup_error: float
    growth_duffing: float
    growth_averaged: float
    grows_duffing: bool
    grows_averaged: bool
    r0: float
    psi0: float
    horizon_t: float
    averaged_params: dict
    t: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)
    envelope_averaged: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "rel_sup_error": self.rel_sup_error,
            "growth_duffing": self.growth_duffing,
            "growth_averaged": self.growth_averaged,
            "grows_duffing": self.grows_duffing,
            "grows_averaged": self.grows_averaged,
            "r0": self.r0,
            "psi0": self.psi0,
            "horizon_t": self.horizon_t,
            "averaged_params": self.averaged_params,
        }

    def to_csv(self, path) -> None:
        write_csv(
            path,
            ["t", "envelope", "envelope_averaged", "r"],
            zip(self.t, self.envelope, self.envelope_averaged, self.r),
        )


def duffing_initial_slow_state(x0: float, v0: float, dp: DuffingParams) -> Tuple[float, float]:
    """Slow ``(r, psi)`` at ``t = 0`` from ``x = sqrt(kappa eps r) cos((phi + psi)/2)``."""
    a2 = x0 * x0 + v0 * v0
    return a2 / (dp.kappa * dp.eps), 2.0 * math.atan2(-v0, x0)


def duffing_compare(
    dp: DuffingParams,
    horizon_t: float,
    cfg: IntegratorConfig = IntegratorConfig(h_max=0.5),
    x0: float = 1e-3,
    v0: float = 0.0,
    samples_per_period: int = 64,
    growth_threshold: float = 2.0,
) -> DuffingReport:
    """Compare the oscillator's amplitude envelope with ``sqrt(kappa eps r(tau))``.

    The envelope is ``sqrt(x^2 + v^2)`` averaged over one fast period
    (window ``2 pi`` in ``t``).  ``rel_sup_error`` is the sup of the
    envelope difference divided by the sup of the averaged envelope;
    growth is the ratio of final to initial squared envelope.
    """
    avg = dp.averaged()
    if avg.delta >= 1:
        raise DomainError(
            f"averaged dissipation delta = 2 beta / eps = {avg.delta:g} >= 1: no autoresonant branch"
        )
    if not horizon_t > 2 * math.pi:
        raise DomainError("horizon must cover at least one fast period")
    out = kernels.integrate_duffing(
        x0, v0, 0.0, horizon_t, dp.beta, dp.gamma, dp.eps, dp.alpha, *cfg.kernel_args(), True
    )
    if out[0] == kernels.STIFF:
        raise StiffnessError("Duffing integration step underflow")
    if out[0] != kernels.COMPLETED:
        raise StiffnessError(f"Duffing integration stopped early ({_STATUS.get(out[0], out[0])})")
    t, x, v, dx, dv = out[6]
    fast = Trajectory(t, np.column_stack((x, v)), COMPLETED, derivs=np.column_stack((dx, dv)))

    r0, psi0 = duffing_initial_slow_state(x0, v0, dp)
    tau1 = float(dp.slow_time(horizon_t))
    slow = integrate_until_escape(PhaseProblem(avg), (r0, psi0), 1e-300, tau1, math.inf, None, cfg)
    if slow.status != COMPLETED:
        raise StiffnessError(f"averaged integration stopped early ({slow.status})")

    dt = 2.0 * math.pi / samples_per_period
    grid = np.arange(0.0, horizon_t + 0.5 * dt, dt)
    grid = grid[grid <= horizon_t]
    xs = fast.dense(grid)
    amp = np.hypot(xs[:, 0], xs[:, 1])
    kernel = np.ones(samples_per_period) / samples_per_period
    smooth = np.convolve(amp, kernel, mode="valid")
    t_mid = grid[: smooth.size] + 0.5 * (samples_per_period - 1) * dt
    tau_mid = np.clip(dp.slow_time(t_mid), slow.times[0], slow.times[-1])
    r_mid = slow.dense(tau_mid)[:, 0]
    env_avg = duffing_envelope(np.maximum(r_mid, 0.0), dp)

    err = float(np.max(np.abs(smooth - env_avg)) / np.max(env_avg))
    g_duff = float((smooth[-1] / smooth[0]) ** 2)
    g_avg = float((env_avg[-1] / env_avg[0]) ** 2)
    return DuffingReport(
        rel_sup_error=err,
        growth_duffing=g_duff,
        growth_averaged=g_avg,
        grows_duffing=g_duff >= growth_threshold,
        grows_averaged=g_avg >= growth_threshold,
        r0=r0,
        psi0=psi0,
        horizon_t=horizon_t,
        averaged_params=avg.as_dict(),
        t=t_mid,
        envelope=smooth,
        envelope_averaged=env_avg,
        r=r_mid,
    )
