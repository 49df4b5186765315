"""Deterministic and random persistent perturbations and their class checks.

A perturbation triple ``(xi, eta, zeta)`` belongs to the deterministic class
``D^h_{a,b,c}`` when ``|xi| tau^-a + |eta| tau^-b + |zeta| tau^-c <= h``, and
to the random class ``R^h_{a,b,c}`` when that pointwise expression is bounded
by an envelope ``S`` whose unit-window moving average satisfies
``M_tau S <= mu nu`` with ``E nu <= h``.

Random paths here are tau-only and indicator based: every component is a
power of ``tau`` times a piecewise-constant process ``J(tau)``, which keeps
the moving averages exactly integrable and lets the compiled kernel land its
steps on the jump times.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import ModelParams, PerturbationValues
from .errors import ConfigError, DomainError

__all__ = [
    "PertKind",
    "ClassSpec",
    "Distribution",
    "DeterministicPert",
    "StructuredForm",
    "RandomPertPath",
    "JumpTrainSpec",
    "SamplePlan",
    "MembershipReport",
    "make_example1",
    "Example1Drift",
    "example1_drift",
    "sample_jump_train",
    "sample_single_jump",
    "verify_deterministic_membership",
    "verify_random_membership",
    "duffing_pert_map",
    "zero_path",
]

Seed = Union[int, np.random.SeedSequence]


class PertKind(str, Enum):
    DETERMINISTIC = "deterministic"
    RANDOM = "random"


@dataclass(frozen=True)
class ClassSpec:
    """Growth exponents ``(a, b, c)`` and bound ``h`` of a perturbation class."""

    a: float
    b: float
    c: float
    h: float
    kind: PertKind = PertKind.DETERMINISTIC

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.a, self.b, self.c, self.h)):
            raise ConfigError("class exponents and bound must be finite")
        if self.h <= 0:
            raise ConfigError(f"class bound h must be positive, got {self.h}")
        object.__setattr__(self, "kind", PertKind(self.kind))

    @property
    def theta(self) -> float:
        return max(self.a + 0.5, self.b, self.c)

    @property
    def kappa0(self) -> float:
        """Largest admissible interval exponent; infinite when ``theta <= 0``."""
        return 1.0 / self.theta if self.theta > 0 else math.inf

    @property
    def infinite_interval(self) -> bool:
        return self.theta <= 0

    def weighted(self, xi, eta, zeta, tau):
        """Pointwise class expression ``|xi| tau^-a + |eta| tau^-b + |zeta| tau^-c``."""
        tau = np.asarray(tau, dtype=float)
        return (
            np.abs(xi) * tau ** (-self.a)
            + np.abs(eta) * tau ** (-self.b)
            + np.abs(zeta) * tau ** (-self.c)
        )

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "h": self.h, "kind": self.kind.value}


# ------------------------------------------------------------------ distributions


@dataclass(frozen=True)
class Distribution:
    """Jump-size or jump-time law: uniform, gaussian, constant or two-point."""

    kind: str
    params: Tuple[float, ...]

    _ARITY = {"uniform": ("lo", "hi"), "gaussian": ("mean", "sd"), "constant": ("value",), "two_point": ("p", "v1", "v2")}

    def __post_init__(self):
        if self.kind not in self._ARITY:
            raise ConfigError(f"unknown distribution {self.kind!r}; choose one of {sorted(self._ARITY)}")
        names = self._ARITY[self.kind]
        if len(self.params) != len(names):
            raise ConfigError(f"{self.kind} distribution needs parameters {names}")
        if not all(math.isfinite(float(x)) for x in self.params):
            raise ConfigError(f"{self.kind} distribution parameters must be finite")
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        if self.kind == "uniform" and not self.params[0] < self.params[1]:
            raise ConfigError("uniform distribution needs lo < hi")
        if self.kind == "gaussian" and self.params[1] <= 0:
            raise ConfigError("gaussian distribution needs sd > 0")
        if self.kind == "two_point" and not 0.0 <= self.params[0] <= 1.0:
            raise ConfigError("two_point distribution needs 0 <= p <= 1")

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", (lo, hi))

    @classmethod
    def gaussian(cls, mean, sd):
        return cls("gaussian", (mean, sd))

    @classmethod
    def constant(cls, value):
        return cls("constant", (value,))

    @classmethod
    def two_point(cls, p, v1, v2):
        return cls("two_point", (p, v1, v2))

    @classmethod
    def from_dict(cls, data: dict) -> "Distribution":
        if not isinstance(data, dict) or "kind" not in data:
            raise ConfigError("distribution must be a mapping with a 'kind' key")
        kind = data["kind"]
        if kind not in cls._ARITY:
            raise ConfigError(f"unknown distribution {kind!r}; choose one of {sorted(cls._ARITY)}")
        names = cls._ARITY[kind]
        extra = set(data) - set(names) - {"kind"}
        if extra:
            raise ConfigError(f"unknown keys for {kind} distribution: {sorted(extra)}")
        missing = [n for n in names if n not in data]
        if missing:
            raise ConfigError(f"{kind} distribution is missing {missing}")
        try:
            return cls(kind, tuple(float(data[n]) for n in names))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad {kind} distribution parameters: {exc}") from None

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        out.update(zip(self._ARITY[self.kind], self.params))
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.params[0], self.params[1], size)
        if self.kind == "gaussian":
            return rng.normal(self.params[0], self.params[1], size)
        if self.kind == "constant":
            return np.full(size, self.params[0])
        p, v1, v2 = self.params
        return np.where(rng.random(size) < p, v1, v2)

    def mean_abs(self) -> float:
        """Closed-form ``E|X|``."""
        if self.kind == "uniform":
            lo, hi = self.params
            if lo >= 0:
                return 0.5 * (lo + hi)
            if hi <= 0:
                return -0.5 * (lo + hi)
            return (lo * lo + hi * hi) / (2.0 * (hi - lo))
        if self.kind == "gaussian":
            m, s = self.params
            return s * math.sqrt(2.0 / math.pi) * math.exp(-0.5 * (m / s) ** 2) + m * math.erf(m / (s * math.sqrt(2.0)))
        if self.kind == "constant":
            return abs(self.params[0])
        p, v1, v2 = self.params
        return p * abs(v1) + (1.0 - p) * abs(v2)

    def strictly_positive(self) -> bool:
        if self.kind == "uniform":
            return self.params[0] > 0
        if self.kind == "constant":
            return self.params[0] > 0
        if self.kind == "two_point":
            p, v1, v2 = self.params
            return (v1 > 0 or p == 0) and (v2 > 0 or p == 1)
        return False


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _seed_int(seed: Seed) -> Optional[int]:
    return int(seed) if isinstance(seed, (int, np.integer)) else None


# ------------------------------------------------------------------ deterministic


@dataclass(frozen=True)
class StructuredForm:
    """``comp = scale * J(tau) * tau^power`` with ``J = base + sum of indicator jumps``.

    The compiled kernel integrates this form directly.
    """

    base: float = 0.0
    coef: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    powers: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    segments: Tuple[Tuple[float, float, float], ...] = ()


@dataclass(frozen=True)
class DeterministicPert:
    """Triple of functions ``(r, psi, tau) -> value`` with its declared class."""

    xi: Callable
    eta: Callable
    zeta: Callable
    spec: Optional[ClassSpec] = None
    name: str = "custom"
    structured: Optional[StructuredForm] = field(default=None, compare=False)

    def __call__(self, r, psi, tau) -> PerturbationValues:
        return PerturbationValues(self.xi(r, psi, tau), self.eta(r, psi, tau), self.zeta(r, psi, tau))


def _const(value):
    def fn(r, psi, tau):
        return np.full(np.broadcast(r, psi, tau).shape, float(value))[()]

    return fn


def _tau_identity(r, psi, tau):
    shape = np.broadcast(r, psi, tau).shape
    return np.array(np.broadcast_to(np.asarray(tau, dtype=float), shape))[()]


def make_example1() -> DeterministicPert:
    """``xi = 1``, ``eta = 1``, ``zeta = tau`` in the class ``D^3_{0,0,1}``."""
    return DeterministicPert(
        xi=_const(1.0),
        eta=_const(1.0),
        zeta=_tau_identity,
        spec=ClassSpec(0.0, 0.0, 1.0, 3.0),
        name="example1",
        structured=StructuredForm(base=1.0, powers=(0.0, 0.0, 1.0)),
    )


@dataclass(frozen=True)
class Example1Drift:
    """Leading asymptotics of the perturbed resonant solution under Example 1."""

    slope: float
    phase_limit: float
    mu: float

    def weighted_deviation(self, tau):
        """Predicted ``|R_ref - r_mu| tau^-1/2 ~ mu tau^(1/2)``."""
        return self.mu * np.sqrt(np.asarray(tau, dtype=float))

    def escape_estimate(self, eps: float) -> float:
        """Time at which the predicted deviation reaches ``eps``."""
        return math.inf if self.mu == 0 else (eps / self.mu) ** 2


def example1_drift(params: ModelParams, mu: float) -> Example1Drift:
    """Slope ``lam - mu`` and phase ``pi - arcsin(delta / (1 + mu))``."""
    if mu < 0 or mu >= params.lam:
        raise DomainError(f"need 0 <= mu < lambda, got mu={mu}, lambda={params.lam}")
    arg = params.delta / (1.0 + mu)
    if arg > 1:
        raise DomainError("delta / (1 + mu) exceeds 1: no resonant phase")
    return Example1Drift(params.lam - mu, math.pi - math.asin(arg), mu)


def duffing_pert_map(
    a_func: Callable[[float], float],
    phi_func: Callable[[float], float],
    eps: float,
    dphi: Optional[Callable[[float], float]] = None,
    spec: Optional[ClassSpec] = None,
) -> DeterministicPert:
    """Map oscillator-level pump perturbations ``(a, phi)`` to the slow triple.

    ``xi = eta = a(t)`` and ``zeta = -4 phi'(t) / eps`` with ``t = 2 tau / eps``.
    ``phi'`` uses ``dphi`` when given, else a central difference with step
    ``1e-6 max(1, |t|)``.
    """
    if not eps > 0:
        raise DomainError("eps must be positive")

    def deriv(t):
        if dphi is not None:
            return dphi(t)
        h = 1e-6 * max(1.0, abs(t))
        return (phi_func(t + h) - phi_func(t - h)) / (2.0 * h)

    def xi(r, psi, tau):
        return np.vectorize(lambda s: float(a_func(2.0 * s / eps)))(np.asarray(tau, dtype=float))[()]

    def zeta(r, psi, tau):
        return np.vectorize(lambda s: -4.0 * float(deriv(2.0 * s / eps)) / eps)(np.asarray(tau, dtype=float))[()]

    return DeterministicPert(xi=xi, eta=xi, zeta=zeta, spec=spec, name="duffing")


# ----------------------------------------------------------------------- random


@dataclass(frozen=True)
class JumpTrainSpec:
    """Train ``J_N = sum_n j_n chi(offset + n <= tau <= offset + n + mu)``, ``n = 1..N``."""

    N: int
    jump_dist: Distribution
    mu: float
    offset: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"jump train N must be a positive integer, got {self.N!r}")
        if not isinstance(self.jump_dist, Distribution):
            raise ConfigError("jump_dist must be a Distribution")
        if not 0 < self.mu <= 1:
            raise ConfigError(f"jump width mu must lie in (0, 1], got {self.mu}")
        if not (math.isfinite(self.offset) and self.offset >= 0):
            raise ConfigError("offset must be finite and nonnegative")

    def expected_nu_window(self) -> float:
        """``3 E[|j_n| + |j_{n+1}|]`` for one interior window."""
        return 6.0 * self.jump_dist.mean_abs() if self.N > 1 else 3.0 * self.jump_dist.mean_abs()


@dataclass(frozen=True)
class RandomPertPath:
    """One realization ``xi = J tau^p_xi``, ``eta = J tau^p_eta``, ``zeta = J tau^p_zeta``.

    ``J(tau) = sum_k v_k chi(lo_k <= tau <= hi_k)``.  ``exponents`` are the
    class exponents ``(a, b, c)`` the path is declared in; the envelope is
    ``S = |xi| tau^-a + |eta| tau^-b + |zeta| tau^-c`` and ``nu`` the
    constructed moving-average constant.
    """

    kind: str
    segments: Tuple[Tuple[float, float, float], ...]
    powers: Tuple[float, float, float]
    exponents: Tuple[float, float, float]
    nu: float
    mu: float
    seed: Optional[int] = None

    # ---- pointwise evaluation
    def jump(self, tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for lo, hi, v in self.segments:
            out = out + np.where((tau >= lo) & (tau <= hi), v, 0.0)
        return out[()] if out.ndim == 0 else out

    def values(self, tau) -> PerturbationValues:
        tau = np.asarray(tau, dtype=float)
        j = np.asarray(self.jump(tau))
        comps = [j * tau**p for p in self.powers]
        if tau.ndim == 0:
            comps = [float(c) for c in comps]
        return PerturbationValues(*comps)

    def __call__(self, r, psi, tau) -> PerturbationValues:
        return self.values(tau)

    def envelope(self, tau):
        """``S(tau) = |J| sum_k tau^(p_k - e_k)``; equals ``3|J|`` for the shipped jump-train and single-jump paths."""
        tau = np.asarray(tau, dtype=float)
        j = np.abs(self.jump(tau))
        w = sum(tau ** (p - e) for p, e in zip(self.powers, self.exponents))
        return j * w

    @property
    def structured(self) -> StructuredForm:
        return StructuredForm(base=0.0, powers=self.powers, segments=self.segments)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(sorted({x for lo, hi, _ in self.segments for x in (lo, hi)}))

    # ---- exact moving average
    def _pieces(self):
        xs = np.array(self.breakpoints)
        if xs.size < 2:
            return xs, np.zeros(0)
        mids = 0.5 * (xs[:-1] + xs[1:])
        return xs, np.abs(np.atleast_1d(self.jump(mids)))

    def moving_average(self, tau):
        """Exact ``M_tau S = int_tau^{tau+1} S`` by piecewise integration."""
        xs, absj = self._pieces()
        degs = [p - e for p, e in zip(self.powers, self.exponents)]
        taus = np.atleast_1d(np.asarray(tau, dtype=float))
        out = np.zeros_like(taus)
        for i in range(absj.size):
            if absj[i] == 0.0:
                continue
            lo = np.maximum(xs[i], taus)
            hi = np.minimum(xs[i + 1], taus + 1.0)
            ok = hi > lo
            if not np.any(ok):
                continue
            a, b = lo[ok], hi[ok]
            total = np.zeros_like(a)
            for d in degs:
                if d == 0:
                    total += b - a
                elif d == -1:
                    total += np.log(b / a)
                else:
                    total += (b ** (d + 1) - a ** (d + 1)) / (d + 1)
            out[ok] += absj[i] * total
        return out[0] if np.ndim(tau) == 0 else out

    def to_csv(self, path, taus) -> None:
        """Dump ``tau, xi, eta, zeta, S`` with 17 significant digits."""
        taus = np.asarray(taus, dtype=float)
        pv = self.values(taus)
        s = self.envelope(taus)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tau", "xi", "eta", "zeta", "S"])
            for row in zip(taus, pv.xi, pv.eta, pv.zeta, s):
                w.writerow([f"{float(x):.17g}" for x in row])


def zero_path(exponents=(0.0, 0.0, 1.0), mu: float = 1.0) -> RandomPertPath:
    return RandomPertPath("zero", (), (0.0, 0.0, 1.0), tuple(exponents), 0.0, mu)


def sample_jump_train(spec: JumpTrainSpec, seed: Seed) -> RandomPertPath:
    """Realize ``xi = eta = J_N``, ``zeta = tau J_N`` with ``nu = 3 max_n(|j_n| + |j_{n+1}|)``."""
    rng = _rng(seed)
    j = spec.jump_dist.sample(rng, spec.N)
    segments = tuple(
        (spec.offset + n, spec.offset + n + spec.mu, float(j[n - 1])) for n in range(1, spec.N + 1)
    )
    aj = np.abs(j)
    pairs = aj + np.append(aj[1:], 0.0)  # j_{N+1} = 0
    return RandomPertPath(
        kind="jump_train",
        segments=segments,
        powers=(0.0, 0.0, 1.0),
        exponents=(0.0, 0.0, 1.0),
        nu=float(3.0 * pairs.max()),
        mu=spec.mu,
        seed=_seed_int(seed),
    )


def sample_single_jump(omega_dist: Distribution, jump_dist: Distribution, mu: float, seed: Seed) -> RandomPertPath:
    """Realize ``xi = J``, ``eta = zeta = tau J`` with ``J = j chi(omega <= tau <= omega + mu)``; ``nu = 3|j|``."""
    if not isinstance(omega_dist, Distribution) or not isinstance(jump_dist, Distribution):
        raise ConfigError("omega_dist and jump_dist must be Distribution descriptors")
    if not omega_dist.strictly_positive():
        raise ConfigError("jump time distribution must be supported on (0, inf)")
    if not 0 < mu <= 1:
        raise ConfigError(f"jump width mu must lie in (0, 1], got {mu}")
    rng = _rng(seed)
    omega = float(omega_dist.sample(rng, 1)[0])
    j = float(jump_dist.sample(rng, 1)[0])
    return RandomPertPath(
        kind="single_jump",
        segments=((omega, omega + mu, j),),
        powers=(0.0, 1.0, 1.0),
        exponents=(0.0, 1.0, 1.0),
        nu=3.0 * abs(j),
        mu=mu,
        seed=_seed_int(seed),
    )


# ------------------------------------------------------------------- membership


@dataclass(frozen=True)
class SamplePlan:
    """Finite sampling of ``(r, psi, tau)`` used for class sup-norm checks."""

    tau_max: float = 1e3
    tau_min: float = 1e-2
    n_tau: int = 200
    n_r: int = 9
    n_psi: int = 13
    r_scale: float = 10.0  # |r| <= r_scale * lam * tau_max
    lam: float = 1.0
    psi_range: Tuple[float, float] = (-2.0 * math.pi, 4.0 * math.pi)

    def grids(self):
        taus = np.geomspace(self.tau_min, self.tau_max, self.n_tau)
        rmax = self.r_scale * self.lam * self.tau_max
        rs = np.linspace(-rmax, rmax, self.n_r)
        psis = np.linspace(self.psi_range[0], self.psi_range[1], self.n_psi)
        return rs, psis, taus

    def to_dict(self) -> dict:
        return {
            "tau_min": self.tau_min, "tau_max": self.tau_max, "n_tau": self.n_tau,
            "n_r": self.n_r, "n_psi": self.n_psi, "r_scale": self.r_scale,
            "lam": self.lam, "psi_range": list(self.psi_range),
        }


@dataclass
class MembershipReport:
    """Sampling-based membership outcome."""

    passed: bool
    sup: float
    bound: float
    unbounded_trend: bool = False
    details: dict = field(default_factory=dict)


def verify_deterministic_membership(
    pert: DeterministicPert, spec: ClassSpec, plan: SamplePlan = SamplePlan()
) -> MembershipReport:
    """Empirical sup of the class expression over the sample plan, compared with ``h``.

    A trend flag is raised when the per-tau sup keeps growing over the top
    decade of the tau grid (log-log slope above 0.05), which indicates the
    class expression is unbounded rather than merely large.
    """
    rs, psis, taus = plan.grids()
    R, P, T = np.meshgrid(rs, psis, taus, indexing="ij")
    pv = pert(R, P, T)
    g = spec.weighted(np.broadcast_to(pv.xi, T.shape), np.broadcast_to(pv.eta, T.shape), np.broadcast_to(pv.zeta, T.shape), T)
    per_tau = g.reshape(-1, taus.size).max(axis=0)
    sup = float(per_tau.max())
    top = taus >= taus[-1] / 10.0
    trend = False
    if top.sum() >= 2 and np.all(per_tau[top] > 0):
        slope = np.polyfit(np.log(taus[top]), np.log(per_tau[top]), 1)[0]
        trend = bool(slope > 0.05)
    tol = 1e-12 * max(1.0, spec.h)
    return MembershipReport(
        passed=bool(sup <= spec.h + tol) and not trend,
        sup=sup,
        bound=spec.h,
        unbounded_trend=trend,
        details={"plan": plan.to_dict(), "method": "grid sampling"},
    )


def verify_random_membership(
    path: Union[RandomPertPath, Sequence[RandomPertPath]],
    spec: ClassSpec,
    grid_step: Optional[float] = None,
    n_env: int = 4001,
) -> MembershipReport:
    """Check ``|.|-expression <= S`` and ``M_tau S <= mu nu`` along a sliding grid.

    For a sequence of paths every path is checked and ``E nu`` is estimated
    by the sample mean (with its standard error) and compared with ``h``.
    Moving averages are integrated exactly over the piecewise-constant jumps.
    """
    paths = [path] if isinstance(path, RandomPertPath) else list(path)
    if not paths:
        raise ValueError("no paths given")
    worst_ratio = 0.0
    env_ok = True
    ma_ok = True
    for p in paths:
        bps = p.breakpoints
        end = (bps[-1] if bps else 1.0) + 1.0
        step = grid_step if grid_step is not None else p.mu / 10.0
        grid = np.arange(0.0, end + step, step)
        ma = p.moving_average(grid)
        bound = p.mu * p.nu
        tol = 1e-12 * max(1.0, bound)
        if np.any(ma > bound + tol):
            ma_ok = False
        if bound > 0:
            worst_ratio = max(worst_ratio, float(ma.max() / bound))
        elif ma.max() > 0:
            worst_ratio = math.inf
        # envelope soundness on a fine grid including every jump edge
        tg = np.union1d(np.linspace(1e-9, end, n_env), np.array(bps, dtype=float))
        tg = tg[tg > 0]
        pv = p.values(tg)
        lhs = spec.weighted(pv.xi, pv.eta, pv.zeta, tg)
        if np.any(lhs > p.envelope(tg) * (1 + 1e-12) + 1e-300):
            env_ok = False
    nus = np.array([p.nu for p in paths])
    mean_nu = float(nus.mean())
    se = float(nus.std(ddof=1) / math.sqrt(nus.size)) if nus.size > 1 else math.nan
    passed = env_ok and ma_ok and mean_nu <= spec.h
    return MembershipReport(
        passed=bool(passed),
        sup=worst_ratio,
        bound=spec.h,
        details={
            "n_paths": len(paths),
            "envelope_ok": env_ok,
            "moving_average_ok": ma_ok,
            "mean_nu": mean_nu,
            "nu_stderr": se,
            "max_ma_over_mu_nu": worst_ratio,
            "method": "exact piecewise integration on a sliding grid",
        },
    )
