"""Pure-Python integration kernels.

Line-for-line mirror of ``_kernels.pyx``; used when the compiled extension is
unavailable (or when ``AUTORESONANCE_PURE_PYTHON=1``).  Both backends perform
the same floating-point operations in the same order.
"""

import math

import numpy as np

COMPLETED = 0
ESCAPED = 1
VALIDITY_VIOLATION = 2
STEP_LIMIT = 3
STIFF = 4

H_MIN = 1e-12
LAND_SLACK = 1e-12  # relative gap below which a step lands on the segment end
BISECT_WIDTH = 1e-6

# Dormand-Prince 5(4)
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0


class _Phase:
    """Resonance equations with a tau-only structured perturbation."""

    __slots__ = ("lam", "delta", "f", "cxi", "ceta", "czeta", "pxi", "peta", "pzeta", "jval")

    def __init__(self, lam, delta, f, pmu, cxi, ceta, czeta, pxi, peta, pzeta):
        self.lam = lam
        self.delta = delta
        self.f = f
        self.cxi = pmu * cxi
        self.ceta = pmu * ceta
        self.czeta = pmu * czeta
        self.pxi = pxi
        self.peta = peta
        self.pzeta = pzeta
        self.jval = 0.0

    def __call__(self, t, y0, y1):
        j = self.jval
        xi = self.cxi * j
        eta = self.ceta * j
        zeta = self.czeta * j
        if self.pxi != 0.0:
            xi *= t**self.pxi
        if self.peta != 0.0:
            eta *= t**self.peta
        if self.pzeta != 0.0:
            zeta *= t**self.pzeta
        return (
            (1.0 + xi) * y0 * math.sin(y1) - self.delta * y0,
            y0 - self.lam * t + zeta + (self.f + eta) * math.cos(y1),
        )


class _Duffing:
    __slots__ = ("beta", "gamma", "eps", "alpha")

    def __init__(self, beta, gamma, eps, alpha):
        self.beta = beta
        self.gamma = gamma
        self.eps = eps
        self.alpha = alpha

    def __call__(self, t, y0, y1):
        phase = 2.0 * t + self.alpha * t * t
        return y1, -self.beta * y1 - (1.0 + self.eps * math.cos(phase)) * y0 - self.gamma * y0 * y0 * y0


def _horner(coeffs, s):
    acc = 0.0
    for k in range(len(coeffs) - 1, -1, -1):
        acc = acc * s + coeffs[k]
    return acc


def _deviation(t, y0, y1, lam, ref_r, ref_psi, kind):
    s = 1.0 / t
    dr = y0 - (lam * t + _horner(ref_r, s))
    dpsi = y1 - _horner(ref_psi, s)
    if kind == 0:
        return abs(dr) / math.sqrt(t) + abs(dpsi)
    if kind == 1:
        return abs(dr) / math.sqrt(lam * t) + abs(dpsi)
    return math.hypot(dr / math.sqrt(lam * t), dpsi)


def _hermite(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    u = (t - t0) / h
    u2 = u * u
    u3 = u2 * u
    h00 = 2.0 * u3 - 3.0 * u2 + 1.0
    h10 = u3 - 2.0 * u2 + u
    h01 = -2.0 * u3 + 3.0 * u2
    h11 = u3 - u2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def _jump_value(t, base, seg_lo, seg_hi, seg_val):
    j = base
    for k in range(len(seg_lo)):
        if seg_lo[k] <= t <= seg_hi[k]:
            j += seg_val[k]
    return j


class _Recorder:
    def __init__(self, enabled):
        self.enabled = enabled
        self.t, self.y0, self.y1, self.d0, self.d1 = [], [], [], [], []

    def add(self, t, y0, y1, d0, d1):
        if self.enabled:
            self.t.append(t)
            self.y0.append(y0)
            self.y1.append(y1)
            self.d0.append(d0)
            self.d1.append(d1)

    def arrays(self):
        if not self.enabled:
            return None
        return tuple(np.array(a, dtype=float) for a in (self.t, self.y0, self.y1, self.d0, self.d1))


def _run(fun, y0, y1, t, t_end, breaks, jump, ref, check_valid, method, rtol, atol, h_init, h_max, max_steps, record):
    """Shared stepping loop.

    ``jump`` is ``(base, seg_lo, seg_hi, seg_val)`` or None; ``ref`` is
    ``(lam, ref_r, ref_psi, eps, kind)`` or None (no escape detection).
    ``check_valid`` stops the run when the first component turns negative.
    """
    rec = _Recorder(record)
    nb = len(breaks)
    ib = 0
    while ib < nb and breaks[ib] <= t:
        ib += 1

    h = h_init
    if h > h_max:
        h = h_max
    seg_end = breaks[ib] if ib < nb else t_end
    if seg_end > t_end:
        seg_end = t_end
    if jump is not None:
        fun.jval = _jump_value(0.5 * (t + seg_end), *jump)
    k1_0, k1_1 = fun(t, y0, y1)
    rec.add(t, y0, y1, k1_0, k1_1)

    if ref is not None:
        lam, ref_r, ref_psi, eps, kind = ref
        if _deviation(t, y0, y1, lam, ref_r, ref_psi, kind) > eps:
            return ESCAPED, t, y0, y1, t, 0, rec.arrays()

    nsteps = 0
    status = COMPLETED
    while t < t_end:
        if nsteps >= max_steps:
            status = STEP_LIMIT
            break
        seg_end = breaks[ib] if ib < nb else t_end
        if seg_end > t_end:
            seg_end = t_end
        landing = False
        if t + h >= seg_end - LAND_SLACK * max(1.0, abs(seg_end)):
            h_try = seg_end - t
            landing = True
        else:
            h_try = h

        if method == 1:
            # classic RK4 with a fixed step
            k2_0, k2_1 = fun(t + 0.5 * h_try, y0 + 0.5 * h_try * k1_0, y1 + 0.5 * h_try * k1_1)
            k3_0, k3_1 = fun(t + 0.5 * h_try, y0 + 0.5 * h_try * k2_0, y1 + 0.5 * h_try * k2_1)
            k4_0, k4_1 = fun(t + h_try, y0 + h_try * k3_0, y1 + h_try * k3_1)
            n0 = y0 + h_try / 6.0 * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
            n1 = y1 + h_try / 6.0 * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
            t_new = seg_end if landing else t + h_try
            k7_0, k7_1 = fun(t_new, n0, n1)
            err = 0.0
        else:
            k2_0, k2_1 = fun(t + C2 * h_try, y0 + h_try * (A21 * k1_0), y1 + h_try * (A21 * k1_1))
            k3_0, k3_1 = fun(
                t + C3 * h_try,
                y0 + h_try * (A31 * k1_0 + A32 * k2_0),
                y1 + h_try * (A31 * k1_1 + A32 * k2_1),
            )
            k4_0, k4_1 = fun(
                t + C4 * h_try,
                y0 + h_try * (A41 * k1_0 + A42 * k2_0 + A43 * k3_0),
                y1 + h_try * (A41 * k1_1 + A42 * k2_1 + A43 * k3_1),
            )
            k5_0, k5_1 = fun(
                t + C5 * h_try,
                y0 + h_try * (A51 * k1_0 + A52 * k2_0 + A53 * k3_0 + A54 * k4_0),
                y1 + h_try * (A51 * k1_1 + A52 * k2_1 + A53 * k3_1 + A54 * k4_1),
            )
            k6_0, k6_1 = fun(
                t + h_try,
                y0 + h_try * (A61 * k1_0 + A62 * k2_0 + A63 * k3_0 + A64 * k4_0 + A65 * k5_0),
                y1 + h_try * (A61 * k1_1 + A62 * k2_1 + A63 * k3_1 + A64 * k4_1 + A65 * k5_1),
            )
            n0 = y0 + h_try * (B1 * k1_0 + B3 * k3_0 + B4 * k4_0 + B5 * k5_0 + B6 * k6_0)
            n1 = y1 + h_try * (B1 * k1_1 + B3 * k3_1 + B4 * k4_1 + B5 * k5_1 + B6 * k6_1)
            t_new = seg_end if landing else t + h_try
            k7_0, k7_1 = fun(t_new, n0, n1)
            e0 = h_try * (E1 * k1_0 + E3 * k3_0 + E4 * k4_0 + E5 * k5_0 + E6 * k6_0 + E7 * k7_0)
            e1 = h_try * (E1 * k1_1 + E3 * k3_1 + E4 * k4_1 + E5 * k5_1 + E6 * k6_1 + E7 * k7_1)
            sc0 = atol + rtol * max(abs(y0), abs(n0))
            sc1 = atol + rtol * max(abs(y1), abs(n1))
            q0 = e0 / sc0
            q1 = e1 / sc1
            err = math.sqrt(0.5 * (q0 * q0 + q1 * q1))
            if err > 1.0:
                h = h_try * max(0.2, 0.9 * err**-0.2)
                if h < H_MIN:
                    status = STIFF
                    break
                continue

        nsteps += 1
        t_old, o0, o1, d0, d1 = t, y0, y1, k1_0, k1_1
        t, y0, y1 = t_new, n0, n1
        k1_0, k1_1 = k7_0, k7_1

        if method != 1:
            if err == 0.0:
                fac = 5.0
            else:
                fac = min(5.0, max(0.2, 0.9 * err**-0.2))
            if landing:
                # a clipped step says nothing about the step size that would have been chosen
                h = max(h, h_try * fac)
            else:
                h = h_try * fac
            if h > h_max:
                h = h_max

        if y0 < 0.0 and check_valid:
            rec.add(t, y0, y1, k1_0, k1_1)
            status = VALIDITY_VIOLATION
            break

        if ref is not None and _deviation(t, y0, y1, lam, ref_r, ref_psi, kind) > eps:
            lo, hi = t_old, t
            while hi - lo > BISECT_WIDTH:
                mid = 0.5 * (lo + hi)
                m0 = _hermite(t_old, t, o0, y0, d0, k1_0, mid)
                m1 = _hermite(t_old, t, o1, y1, d1, k1_1, mid)
                if _deviation(mid, m0, m1, lam, ref_r, ref_psi, kind) > eps:
                    hi = mid
                else:
                    lo = mid
            if hi < t:
                y0 = _hermite(t_old, t, o0, y0, d0, k1_0, hi)
                y1 = _hermite(t_old, t, o1, y1, d1, k1_1, hi)
                t = hi
                k1_0, k1_1 = fun(t, y0, y1)
            rec.add(t, y0, y1, k1_0, k1_1)
            return ESCAPED, t, y0, y1, t, nsteps, rec.arrays()

        rec.add(t, y0, y1, k1_0, k1_1)

        if landing and ib < nb and t >= breaks[ib]:
            while ib < nb and breaks[ib] <= t:
                ib += 1
            if jump is not None:
                seg_end = breaks[ib] if ib < nb else t_end
                if seg_end > t_end:
                    seg_end = t_end
                jv = _jump_value(0.5 * (t + seg_end), *jump)
                if jv != fun.jval:
                    fun.jval = jv
                    k1_0, k1_1 = fun(t, y0, y1)

    return status, t, y0, y1, math.nan, nsteps, rec.arrays()


def integrate_phase(
    r0, psi0, tau0, tau1,
    lam, delta, f,
    pmu, cxi, ceta, czeta, pxi, peta, pzeta, base,
    seg_lo, seg_hi, seg_val, breaks,
    ref_r, ref_psi, eps, norm_kind,
    method, rtol, atol, h_init, h_max, max_steps, record,
):
    """Integrate the (perturbed) resonance equations with escape detection.

    Returns ``(status, tau, r, psi, escape_time, n_steps, record)``; ``record``
    is ``(t, r, psi, dr, dpsi)`` arrays of accepted steps or None.
    """
    fun = _Phase(lam, delta, f, pmu, cxi, ceta, czeta, pxi, peta, pzeta)
    jump = (base, list(seg_lo), list(seg_hi), list(seg_val))
    ref = (lam, list(ref_r), list(ref_psi), eps, norm_kind) if math.isfinite(eps) else None
    return _run(
        fun, float(r0), float(psi0), float(tau0), float(tau1), list(breaks), jump, ref, True,
        method, rtol, atol, h_init, h_max, max_steps, record,
    )


def integrate_duffing(
    x0, v0, t0, t1,
    beta, gamma, eps, alpha,
    method, rtol, atol, h_init, h_max, max_steps, record,
):
    """Integrate the unperturbed chirped Duffing oscillator."""
    fun = _Duffing(beta, gamma, eps, alpha)
    return _run(
        fun, float(x0), float(v0), float(t0), float(t1), [], None, None, False,
        method, rtol, atol, h_init, h_max, max_steps, record,
    )
