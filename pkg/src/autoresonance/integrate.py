"""General-purpose explicit Runge-Kutta integration for small ODE systems.

The structured resonance and Duffing problems go through the compiled
kernels (see :mod:`autoresonance.kernels`); this module handles arbitrary
vector fields such as the transformed near-Hamiltonian system.  Both use
the same Dormand-Prince 5(4) pair, RMS error norm and step controller.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, StiffnessError

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "hermite",
    "COMPLETED",
    "ESCAPED",
    "VALIDITY_VIOLATION",
    "STEP_LIMIT",
]

COMPLETED = "completed"
ESCAPED = "escaped"
VALIDITY_VIOLATION = "validity_violation"
STEP_LIMIT = "step_limit"

H_MIN = 1e-12
LAND_SLACK = 1e-12  # relative gap below which a step lands on the segment end
BISECT_WIDTH = 1e-6

_METHODS = {"embedded_rk45": 0, "fixed_rk4": 1}

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass(frozen=True)
class IntegratorConfig:
    """Step control settings shared by every integration path.

    ``method`` is ``"embedded_rk45"`` (adaptive Dormand-Prince) or
    ``"fixed_rk4"`` (classic RK4 with step ``h_init``).
    """

    method: str = "embedded_rk45"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    h_init: float = 1e-3
    h_max: float = 1.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"unknown integrator method {self.method!r}; choose one of {sorted(_METHODS)}")
        for name in ("abs_tol", "rel_tol", "h_init", "h_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"integrator {name} must be a positive finite number, got {value!r}")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ConfigError(f"integrator max_steps must be a positive integer, got {self.max_steps!r}")

    @property
    def method_code(self) -> int:
        return _METHODS[self.method]

    def kernel_args(self) -> tuple:
        """Positional tail ``(method, rtol, atol, h_init, h_max, max_steps)`` for the kernels."""
        return (self.method_code, self.rel_tol, self.abs_tol, self.h_init, self.h_max, int(self.max_steps))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    """Accepted integrator steps with endpoint derivatives for dense output.

    ``states`` has one row per entry of ``times``; ``derivs`` holds the
    vector field at the same points and drives the cubic Hermite
    interpolant in :meth:`dense`.
    """

    times: np.ndarray
    states: np.ndarray
    status: str
    escape_time: Optional[float] = None
    derivs: Optional[np.ndarray] = None
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def dense(self, t) -> np.ndarray:
        """Third-order Hermite interpolation of the stored steps at times ``t``."""
        if self.derivs is None:
            raise ValueError("trajectory was recorded without derivatives")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise ValueError("dense output requested outside the integrated interval")
        idx = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        t0, t1 = self.times[idx], self.times[idx + 1]
        return hermite(
            t0[:, None], t1[:, None],
            self.states[idx], self.states[idx + 1],
            self.derivs[idx], self.derivs[idx + 1],
            t[:, None],
        )


def hermite(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    u = (t - t0) / h
    u2 = u * u
    u3 = u2 * u
    return (
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * h * d0
        + (-2.0 * u3 + 3.0 * u2) * y1
        + (u3 - u2) * h * d1
    )


def _dp_step(rhs, t, y, k1, h):
    ks = [k1]
    for i in range(1, 6):
        yi = y + h * sum(a * k for a, k in zip(_A[i], ks))
        ks.append(np.asarray(rhs(t + _C[i] * h, yi), dtype=float))
    y_new = y + h * sum(b * k for b, k in zip(_B, ks))
    return y_new, ks


def _rk4_step(rhs, t, y, k1, h):
    k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    rhs: Callable[[float, np.ndarray], Sequence[float]],
    initial: Sequence[float],
    t0: float,
    t1: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    *,
    t_eval: Optional[Sequence[float]] = None,
    escape: Optional[Callable[[float, np.ndarray], bool]] = None,
    valid: Optional[Callable[[float, np.ndarray], bool]] = None,
    breakpoints: Sequence[float] = (),
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    Parameters
    ----------
    rhs
        Vector field returning an array-like of the same length as ``initial``.
    escape
        Optional predicate checked at every accepted step; when it becomes
        true the crossing is located by bisection on the Hermite interpolant
        (bracket width 1e-6) and the run stops with status ``escaped``.
    valid
        Optional predicate; a false value stops the run with status
        ``validity_violation``.
    breakpoints
        Times the step sequence must land on exactly (discontinuities of
        the vector field).
    t_eval
        If given, the returned trajectory holds dense output at these times
        (clipped to the integrated interval) instead of the accepted steps.

    Raises
    ------
    StiffnessError
        If the adaptive step drops below 1e-12.
    """
    y = np.array(initial, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got {t0} >= {t1}")

    breaks = sorted(b for b in breakpoints if t0 < b < t1)
    ib = 0
    t = float(t0)
    h = min(cfg.h_init, cfg.h_max)
    k1 = np.asarray(rhs(t, y), dtype=float)
    times, states, derivs = [t], [y.copy()], [k1.copy()]
    status, escape_time = COMPLETED, None
    n_steps = 0

    if escape is not None and escape(t, y):
        status, escape_time = ESCAPED, t
        t_end_reached = True
    else:
        t_end_reached = False

    while not t_end_reached and t < t1:
        if n_steps >= cfg.max_steps:
            status = STEP_LIMIT
            break
        seg_end = breaks[ib] if ib < len(breaks) else t1
        landing = t + h >= seg_end - LAND_SLACK * max(1.0, abs(seg_end))
        h_try = seg_end - t if landing else h

        if cfg.method == "fixed_rk4":
            y_new = _rk4_step(rhs, t, y, k1, h_try)
            t_new = seg_end if landing else t + h_try
            k_new = np.asarray(rhs(t_new, y_new), dtype=float)
            err = 0.0
        else:
            y_new, ks = _dp_step(rhs, t, y, k1, h_try)
            t_new = seg_end if landing else t + h_try
            k_new = np.asarray(rhs(t_new, y_new), dtype=float)
            ks.append(k_new)
            e = h_try * sum(c * k for c, k in zip(_E, ks))
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(float(np.mean((e / scale) ** 2)))
            if not math.isfinite(err):
                err = math.inf
            if err > 1.0:
                h = h_try * max(0.2, 0.9 * err**-0.2)
                if h < H_MIN:
                    raise StiffnessError(f"step size underflow (h={h:.3g}) at t={t:.17g}")
                continue

        n_steps += 1
        t_old, y_old, k_old = t, y, k1
        t, y, k1 = t_new, y_new, k_new

        if cfg.method != "fixed_rk4":
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**-0.2))
            h = max(h, h_try * fac) if landing else h_try * fac
            h = min(h, cfg.h_max)

        if valid is not None and not valid(t, y):
            times.append(t)
            states.append(y.copy())
            derivs.append(k1.copy())
            status = VALIDITY_VIOLATION
            break

        if escape is not None and escape(t, y):
            lo, hi = t_old, t
            while hi - lo > BISECT_WIDTH:
                mid = 0.5 * (lo + hi)
                if escape(mid, hermite(t_old, t, y_old, y, k_old, k1, mid)):
                    hi = mid
                else:
                    lo = mid
            if hi < t:
                y = hermite(t_old, t, y_old, y, k_old, k1, hi)
                t = hi
                k1 = np.asarray(rhs(t, y), dtype=float)
            times.append(t)
            states.append(y.copy())
            derivs.append(k1.copy())
            status, escape_time = ESCAPED, t
            break

        times.append(t)
        states.append(y.copy())
        derivs.append(k1.copy())
        if landing and ib < len(breaks) and t >= breaks[ib]:
            while ib < len(breaks) and breaks[ib] <= t:
                ib += 1
            # the field may jump at a breakpoint; restart FSAL from the new side
            k1 = np.asarray(rhs(t, y), dtype=float)

    traj = Trajectory(
        times=np.array(times),
        states=np.array(states),
        status=status,
        escape_time=escape_time,
        derivs=np.array(derivs),
        n_steps=n_steps,
    )
    if t_eval is None:
        return traj
    grid = np.asarray(t_eval, dtype=float)
    grid = grid[(grid >= traj.times[0]) & (grid <= traj.times[-1])]
    if len(traj.times) < 2:
        return traj
    return Trajectory(
        times=grid,
        states=traj.dense(grid),
        status=status,
        escape_time=escape_time,
        derivs=None,
        n_steps=n_steps,
    )
