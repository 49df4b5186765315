# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled integration kernels (Dormand-Prince 5(4) / RK4 with escape detection).

Mirrors ``_kernels_py.py`` operation for operation; build with
``-ffp-contract=off`` so both backends round identically.
"""

import math

import numpy as np

from libc.math cimport sin, cos, sqrt, fabs, pow, hypot, NAN
from libc.stdlib cimport malloc, realloc, free

cdef int COMPLETED = 0
cdef int ESCAPED = 1
cdef int VALIDITY_VIOLATION = 2
cdef int STEP_LIMIT = 3
cdef int STIFF = 4

cdef double H_MIN = 1e-12
cdef double LAND_SLACK = 1e-12  # relative gap below which a step lands on the segment end
cdef double BISECT_WIDTH = 1e-6

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0


cdef struct Model:
    int kind            # 0 phase, 1 duffing
    double lam, delta, f
    double cxi, ceta, czeta, pxi, peta, pzeta
    double jval
    double beta, gamma, eps, alpha


cdef inline void rhs(Model* m, double t, double y0, double y1, double* out) noexcept nogil:
    cdef double j, xi, eta, zeta, phase
    if m.kind == 0:
        j = m.jval
        xi = m.cxi * j
        eta = m.ceta * j
        zeta = m.czeta * j
        if m.pxi != 0.0:
            xi *= pow(t, m.pxi)
        if m.peta != 0.0:
            eta *= pow(t, m.peta)
        if m.pzeta != 0.0:
            zeta *= pow(t, m.pzeta)
        out[0] = (1.0 + xi) * y0 * sin(y1) - m.delta * y0
        out[1] = y0 - m.lam * t + zeta + (m.f + eta) * cos(y1)
    else:
        phase = 2.0 * t + m.alpha * t * t
        out[0] = y1
        out[1] = -m.beta * y1 - (1.0 + m.eps * cos(phase)) * y0 - m.gamma * y0 * y0 * y0


cdef inline double horner(double[::1] c, double s) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t k
    for k in range(c.shape[0] - 1, -1, -1):
        acc = acc * s + c[k]
    return acc


cdef inline double deviation(double t, double y0, double y1, double lam,
                             double[::1] ref_r, double[::1] ref_psi, int kind) noexcept nogil:
    cdef double s = 1.0 / t
    cdef double dr = y0 - (lam * t + horner(ref_r, s))
    cdef double dpsi = y1 - horner(ref_psi, s)
    if kind == 0:
        return fabs(dr) / sqrt(t) + fabs(dpsi)
    if kind == 1:
        return fabs(dr) / sqrt(lam * t) + fabs(dpsi)
    return hypot(dr / sqrt(lam * t), dpsi)


cdef inline double hermite(double t0, double t1, double y0, double y1,
                           double d0, double d1, double t) noexcept nogil:
    cdef double h = t1 - t0
    cdef double u = (t - t0) / h
    cdef double u2 = u * u
    cdef double u3 = u2 * u
    cdef double h00 = 2.0 * u3 - 3.0 * u2 + 1.0
    cdef double h10 = u3 - 2.0 * u2 + u
    cdef double h01 = -2.0 * u3 + 3.0 * u2
    cdef double h11 = u3 - u2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


cdef inline double jump_value(double t, double base, double[::1] lo, double[::1] hi,
                              double[::1] val) noexcept nogil:
    cdef double j = base
    cdef Py_ssize_t k
    for k in range(lo.shape[0]):
        if lo[k] <= t and t <= hi[k]:
            j += val[k]
    return j


cdef struct Buffer:
    Py_ssize_t n, cap
    double* data


cdef int buf_push(Buffer* b, double t, double y0, double y1, double d0, double d1) noexcept nogil:
    cdef double* grown
    if b.cap == 0:
        return 0
    if b.n == b.cap:
        grown = <double*> realloc(b.data, 2 * b.cap * 5 * sizeof(double))
        if grown == NULL:
            return -1
        b.data = grown
        b.cap *= 2
    b.data[5 * b.n] = t
    b.data[5 * b.n + 1] = y0
    b.data[5 * b.n + 2] = y1
    b.data[5 * b.n + 3] = d0
    b.data[5 * b.n + 4] = d1
    b.n += 1
    return 0


cdef object buf_arrays(Buffer* b):
    if b.cap == 0:
        return None
    out = np.empty((b.n, 5), dtype=np.float64)
    cdef double[:, ::1] view = out
    cdef Py_ssize_t i, k
    for i in range(b.n):
        for k in range(5):
            view[i, k] = b.data[5 * i + k]
    return tuple(np.ascontiguousarray(out[:, k]) for k in range(5))


cdef tuple _run(Model* m, double y0, double y1, double t, double t_end,
                double[::1] breaks, bint has_jump, double base,
                double[::1] seg_lo, double[::1] seg_hi, double[::1] seg_val,
                bint has_ref, double[::1] ref_r, double[::1] ref_psi, double eps, int kind,
                bint check_valid,
                int method, double rtol, double atol, double h_init, double h_max,
                long max_steps, bint record):
    cdef Buffer rec
    rec.n = 0
    rec.cap = 1024 if record else 0
    rec.data = <double*> malloc(1024 * 5 * sizeof(double)) if record else NULL
    if record and rec.data == NULL:
        raise MemoryError()

    cdef Py_ssize_t nb = breaks.shape[0]
    cdef Py_ssize_t ib = 0
    cdef double h, h_try, seg_end, t_new, t_old, err, fac, e0, e1, sc0, sc1, q0, q1
    cdef double n0, n1, o0, o1, d0, d1, lo, hi, mid, m0, m1, jv
    cdef double k1[2]
    cdef double k2[2]
    cdef double k3[2]
    cdef double k4[2]
    cdef double k5[2]
    cdef double k6[2]
    cdef double k7[2]
    cdef bint landing
    cdef long nsteps = 0
    cdef int status = COMPLETED
    cdef double lam = m.lam

    try:
        while ib < nb and breaks[ib] <= t:
            ib += 1
        h = h_init
        if h > h_max:
            h = h_max
        seg_end = breaks[ib] if ib < nb else t_end
        if seg_end > t_end:
            seg_end = t_end
        if has_jump:
            m.jval = jump_value(0.5 * (t + seg_end), base, seg_lo, seg_hi, seg_val)
        rhs(m, t, y0, y1, k1)
        if buf_push(&rec, t, y0, y1, k1[0], k1[1]) < 0:
            raise MemoryError()

        if has_ref and deviation(t, y0, y1, lam, ref_r, ref_psi, kind) > eps:
            return ESCAPED, t, y0, y1, t, 0, buf_arrays(&rec)

        while t < t_end:
            if nsteps >= max_steps:
                status = STEP_LIMIT
                break
            seg_end = breaks[ib] if ib < nb else t_end
            if seg_end > t_end:
                seg_end = t_end
            landing = False
            if t + h >= seg_end - LAND_SLACK * max(1.0, fabs(seg_end)):
                h_try = seg_end - t
                landing = True
            else:
                h_try = h

            if method == 1:
                rhs(m, t + 0.5 * h_try, y0 + 0.5 * h_try * k1[0], y1 + 0.5 * h_try * k1[1], k2)
                rhs(m, t + 0.5 * h_try, y0 + 0.5 * h_try * k2[0], y1 + 0.5 * h_try * k2[1], k3)
                rhs(m, t + h_try, y0 + h_try * k3[0], y1 + h_try * k3[1], k4)
                n0 = y0 + h_try / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
                n1 = y1 + h_try / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
                t_new = seg_end if landing else t + h_try
                rhs(m, t_new, n0, n1, k7)
                err = 0.0
            else:
                rhs(m, t + C2 * h_try, y0 + h_try * (A21 * k1[0]), y1 + h_try * (A21 * k1[1]), k2)
                rhs(m, t + C3 * h_try,
                    y0 + h_try * (A31 * k1[0] + A32 * k2[0]),
                    y1 + h_try * (A31 * k1[1] + A32 * k2[1]), k3)
                rhs(m, t + C4 * h_try,
                    y0 + h_try * (A41 * k1[0] + A42 * k2[0] + A43 * k3[0]),
                    y1 + h_try * (A41 * k1[1] + A42 * k2[1] + A43 * k3[1]), k4)
                rhs(m, t + C5 * h_try,
                    y0 + h_try * (A51 * k1[0] + A52 * k2[0] + A53 * k3[0] + A54 * k4[0]),
                    y1 + h_try * (A51 * k1[1] + A52 * k2[1] + A53 * k3[1] + A54 * k4[1]), k5)
                rhs(m, t + h_try,
                    y0 + h_try * (A61 * k1[0] + A62 * k2[0] + A63 * k3[0] + A64 * k4[0] + A65 * k5[0]),
                    y1 + h_try * (A61 * k1[1] + A62 * k2[1] + A63 * k3[1] + A64 * k4[1] + A65 * k5[1]), k6)
                n0 = y0 + h_try * (B1 * k1[0] + B3 * k3[0] + B4 * k4[0] + B5 * k5[0] + B6 * k6[0])
                n1 = y1 + h_try * (B1 * k1[1] + B3 * k3[1] + B4 * k4[1] + B5 * k5[1] + B6 * k6[1])
                t_new = seg_end if landing else t + h_try
                rhs(m, t_new, n0, n1, k7)
                e0 = h_try * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0])
                e1 = h_try * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1])
                sc0 = atol + rtol * max(fabs(y0), fabs(n0))
                sc1 = atol + rtol * max(fabs(y1), fabs(n1))
                q0 = e0 / sc0
                q1 = e1 / sc1
                err = sqrt(0.5 * (q0 * q0 + q1 * q1))
                if err > 1.0:
                    h = h_try * max(0.2, 0.9 * pow(err, -0.2))
                    if h < H_MIN:
                        status = STIFF
                        break
                    continue

            nsteps += 1
            t_old = t
            o0 = y0
            o1 = y1
            d0 = k1[0]
            d1 = k1[1]
            t = t_new
            y0 = n0
            y1 = n1
            k1[0] = k7[0]
            k1[1] = k7[1]

            if method != 1:
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = min(5.0, max(0.2, 0.9 * pow(err, -0.2)))
                if landing:
                    h = max(h, h_try * fac)
                else:
                    h = h_try * fac
                if h > h_max:
                    h = h_max

            if y0 < 0.0 and check_valid:
                if buf_push(&rec, t, y0, y1, k1[0], k1[1]) < 0:
                    raise MemoryError()
                status = VALIDITY_VIOLATION
                break

            if has_ref and deviation(t, y0, y1, lam, ref_r, ref_psi, kind) > eps:
                lo = t_old
                hi = t
                while hi - lo > BISECT_WIDTH:
                    mid = 0.5 * (lo + hi)
                    m0 = hermite(t_old, t, o0, y0, d0, k1[0], mid)
                    m1 = hermite(t_old, t, o1, y1, d1, k1[1], mid)
                    if deviation(mid, m0, m1, lam, ref_r, ref_psi, kind) > eps:
                        hi = mid
                    else:
                        lo = mid
                if hi < t:
                    m0 = hermite(t_old, t, o0, y0, d0, k1[0], hi)
                    m1 = hermite(t_old, t, o1, y1, d1, k1[1], hi)
                    y0 = m0
                    y1 = m1
                    t = hi
                    rhs(m, t, y0, y1, k1)
                if buf_push(&rec, t, y0, y1, k1[0], k1[1]) < 0:
                    raise MemoryError()
                return ESCAPED, t, y0, y1, t, nsteps, buf_arrays(&rec)

            if buf_push(&rec, t, y0, y1, k1[0], k1[1]) < 0:
                raise MemoryError()

            if landing and ib < nb and t >= breaks[ib]:
                while ib < nb and breaks[ib] <= t:
                    ib += 1
                if has_jump:
                    seg_end = breaks[ib] if ib < nb else t_end
                    if seg_end > t_end:
                        seg_end = t_end
                    jv = jump_value(0.5 * (t + seg_end), base, seg_lo, seg_hi, seg_val)
                    if jv != m.jval:
                        m.jval = jv
                        rhs(m, t, y0, y1, k1)

        return status, t, y0, y1, NAN, nsteps, buf_arrays(&rec)
    finally:
        free(rec.data)


def integrate_phase(
    double r0, double psi0, double tau0, double tau1,
    double lam, double delta, double f,
    double pmu, double cxi, double ceta, double czeta, double pxi, double peta, double pzeta, double base,
    seg_lo, seg_hi, seg_val, breaks,
    ref_r, ref_psi, double eps, int norm_kind,
    int method, double rtol, double atol, double h_init, double h_max, long max_steps, bint record,
):
    """Integrate the (perturbed) resonance equations with escape detection.

    Returns ``(status, tau, r, psi, escape_time, n_steps, record)``.
    """
    cdef Model m
    m.kind = 0
    m.lam = lam
    m.delta = delta
    m.f = f
    m.cxi = pmu * cxi
    m.ceta = pmu * ceta
    m.czeta = pmu * czeta
    m.pxi = pxi
    m.peta = peta
    m.pzeta = pzeta
    m.jval = 0.0
    cdef double[::1] lo = np.ascontiguousarray(seg_lo, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(seg_hi, dtype=np.float64)
    cdef double[::1] val = np.ascontiguousarray(seg_val, dtype=np.float64)
    cdef double[::1] br = np.ascontiguousarray(breaks, dtype=np.float64)
    cdef double[::1] rr = np.ascontiguousarray(ref_r, dtype=np.float64)
    cdef double[::1] rp = np.ascontiguousarray(ref_psi, dtype=np.float64)
    return _run(&m, r0, psi0, tau0, tau1, br, True, base, lo, hi, val,
                math.isfinite(eps), rr, rp, eps, norm_kind, True,
                method, rtol, atol, h_init, h_max, max_steps, record)


def integrate_duffing(
    double x0, double v0, double t0, double t1,
    double beta, double gamma, double eps, double alpha,
    int method, double rtol, double atol, double h_init, double h_max, long max_steps, bint record,
):
    """Integrate the unperturbed chirped Duffing oscillator."""
    cdef Model m
    m.kind = 1
    m.beta = beta
    m.gamma = gamma
    m.eps = eps
    m.alpha = alpha
    m.lam = 0.0
    cdef double[::1] empty = np.zeros(0, dtype=np.float64)
    return _run(&m, x0, v0, t0, t1, empty, False, 0.0, empty, empty, empty,
                False, empty, empty, 0.0, 0, False,
                method, rtol, atol, h_init, h_max, max_steps, record)
