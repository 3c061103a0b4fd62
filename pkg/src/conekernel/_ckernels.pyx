# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Function-for-function twin of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport (exp, log, sin, cos, sinh, cosh, tanh, sqrt, fabs,
                        floor, acosh, copysign, M_PI, NAN, INFINITY)

cnp.import_array()

NAME = "compiled"

cdef double _G = 5.2421875
cdef double _C0 = 0.999999999999997092
cdef double[14] _COEF
_COEF[:] = [57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5]
cdef double _SQRT_2PI = 2.5066282746310005
cdef double _LOG_RESCALE = 280.0 * 2.302585092994045684
cdef double _EPS = 2.220446049250313e-16
cdef double TS_TMAX = 4.5
cdef int TS_MIN_LEVEL = 3
cdef int TS_MAX_LEVEL = 12


cdef double _lgamma(double x) noexcept nogil:
    cdef double tmp = x + _G, ser = _C0, y = x
    cdef int i
    tmp = (x + 0.5) * log(tmp) - tmp
    for i in range(14):
        y += 1.0
        ser += _COEF[i] / y
    return tmp + log(_SQRT_2PI * ser / x)


def log_gamma(double x):
    return _lgamma(x)


def log_gamma_many(xs):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(np.asarray(xs, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] out = np.empty(flat.shape[0])
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _lgamma(flat[i])
    return out.reshape(np.shape(xs))


cdef int _series(double mu, double z, long max_terms, double* result) noexcept nogil:
    cdef double x = 0.25 * z * z
    cdef double total = 1.0, term = 1.0, log_scale = 0.0, jm
    cdef long j = 0
    if max_terms <= 0:
        max_terms = 1000 + <long>(4.0 * z)
    while True:
        j += 1
        jm = j * (mu + j)
        term *= x / jm
        total += term
        if total > 1e280:
            total *= 1e-280
            term *= 1e-280
            log_scale += _LOG_RESCALE
        if x < jm and term < 1e-17 * total:
            break
        if j >= max_terms:
            result[0] = NAN
            return 0
    result[0] = mu * log(0.5 * z) - _lgamma(mu + 1.0) + log_scale + log(total)
    return 1


def log_bessel_i_series(double mu, double z, long max_terms=0):
    cdef double res
    cdef int ok = _series(mu, z, max_terms, &res)
    return res, bool(ok)


# integrand kinds for the tanh-sinh driver
cdef enum:
    K_TRIG = 0
    K_HYP = 1


cdef inline void _eval(int kind, double mu, double z, double x,
                       double* f, double* g) noexcept nogil:
    cdef double s
    if kind == K_TRIG:
        s = sin(0.5 * x)
        g[0] = exp(-2.0 * z * s * s)
        f[0] = g[0] * cos(mu * x)
    else:
        s = sinh(0.5 * x)
        f[0] = exp(-2.0 * z * s * s - mu * x - 2.0 * z)
        g[0] = f[0]


cdef int _tanh_sinh(int kind, double mu, double z, double a, double b,
                    double* value, double* err, double* mag) noexcept nogil:
    """Level-doubling tanh-sinh on [a, b]; only new (odd) nodes per level."""
    cdef double half = 0.5 * (b - a)
    cdef double h, t, v, u, w, x, f, g
    cdef double s = 0.0, m = 0.0, s_prev = 0.0, est, est_prev = 0.0
    cdef long k, kmax, step
    cdef int level
    for level in range(TS_MIN_LEVEL, TS_MAX_LEVEL + 1):
        h = 2.0 ** (-level)
        kmax = <long>(TS_TMAX / h)
        step = 1 if level == TS_MIN_LEVEL else 2
        k = -kmax
        if level > TS_MIN_LEVEL and (k % 2 == 0):
            k += 1
        while k <= kmax:
            t = k * h
            v = 0.5 * M_PI * sinh(t)
            u = tanh(v)
            w = 0.5 * M_PI * cosh(t) / (cosh(v) * cosh(v))
            x = a + half * (1.0 + u)
            _eval(kind, mu, z, x, &f, &g)
            s += w * f
            m += w * fabs(g)
            k += step
        # s, m accumulate sums at unit step; scale by h for the estimate
        est = half * h * s
        if level > TS_MIN_LEVEL:
            if fabs(est - est_prev) <= 64.0 * _EPS * half * h * m or est == est_prev:
                value[0] = est
                err[0] = fabs(est - est_prev)
                mag[0] = half * h * m
                return 1
        est_prev = est
    value[0] = est
    err[0] = fabs(est - est_prev)
    mag[0] = half * h * m
    return 0


cdef void _integral(double mu, double z, double* value, double* err, double* scale) noexcept nogil:
    cdef double tmax = M_PI
    cdef double v1, e1, a1, v2, e2, a2, t2, smp
    cdef int ok1, ok2
    if z > 350.0:
        tmax = M_PI * sqrt(345.0 / z)
        if tmax > M_PI:
            tmax = M_PI
    ok1 = _tanh_sinh(K_TRIG, mu, z, 0.0, tmax, &v1, &e1, &a1)
    value[0] = v1 / M_PI
    err[0] = e1 / M_PI
    scale[0] = a1 / M_PI
    smp = 0.0 if mu == floor(mu) else sin(mu * M_PI)
    if smp != 0.0 and 2.0 * z < 745.0:
        t2 = acosh(1.0 + 745.0 / z)
        ok2 = _tanh_sinh(K_HYP, mu, z, 0.0, t2, &v2, &e2, &a2)
        value[0] -= smp / M_PI * v2
        err[0] += fabs(smp) / M_PI * e2
        scale[0] += fabs(smp) / M_PI * a2
        if not ok2:
            err[0] = INFINITY
    if not ok1:
        err[0] = INFINITY
    err[0] += 16.0 * _EPS * scale[0]


def bessel_i_scaled_integral(double mu, double z):
    cdef double v, e, a
    _integral(mu, z, &v, &e, &a)
    return v, e, a


cdef int _log_bessel_i(double mu, double z, double rtol, double* out) noexcept nogil:
    cdef double v, e, a, bound = 1.5 * mu
    if bound < 12.0:
        bound = 12.0
    if z <= bound:
        if _series(mu, z, 0, out):
            return 0
    else:
        _integral(mu, z, &v, &e, &a)
        if v > 0.0 and e <= rtol * v:
            out[0] = log(v) + z
            return 1
        if _series(mu, z, 100000 + <long>(10.0 * z), out):
            return 0
    out[0] = NAN
    return -1


def log_bessel_i(double mu, double z, double rtol=1e-12):
    cdef double out
    cdef int st = _log_bessel_i(mu, z, rtol, &out)
    return out, st


def log_bessel_i_many(mus, double z, double rtol=1e-12):
    cdef cnp.ndarray[double, ndim=1] flat = np.ascontiguousarray(np.asarray(mus, dtype=float).ravel())
    cdef Py_ssize_t n = flat.shape[0], i
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] fv = flat
    cdef double[::1] ov = out
    cdef long failed = 0
    with nogil:
        for i in range(n):
            if _log_bessel_i(fv[i], z, rtol, &ov[i]) < 0:
                failed += 1
    return out.reshape(np.shape(mus)), failed


def jacobi_eigh(a, double tol=1e-14, int max_sweeps=60):
    """Cyclic-by-row Jacobi. Returns ``(eigenvalues, eigenvectors, sweeps)``, unsorted."""
    cdef cnp.ndarray[double, ndim=2] A_arr = np.array(a, dtype=float, order="C")
    cdef Py_ssize_t n = A_arr.shape[0]
    cdef cnp.ndarray[double, ndim=2] V_arr = np.eye(n)
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] V = V_arr
    cdef Py_ssize_t p, q, r
    cdef double norm = 0.0, off, apq, theta, t, c, s, arp, arq
    cdef int sweep
    for p in range(n):
        for q in range(n):
            norm += A[p, q] * A[p, q]
    norm = sqrt(norm)
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            off = 0.0
            for p in range(n):
                for q in range(n):
                    if p != q:
                        off += A[p, q] * A[p, q]
            if sqrt(off) <= tol * norm:
                sweep -= 1
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = A[p, q]
                    if apq == 0.0:
                        continue
                    if sweep > 3 and fabs(A[p, p]) + 100.0 * fabs(apq) == fabs(A[p, p]) \
                            and fabs(A[q, q]) + 100.0 * fabs(apq) == fabs(A[q, q]):
                        A[p, q] = 0.0
                        A[q, p] = 0.0
                        continue
                    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        arp = A[p, r]
                        arq = A[q, r]
                        A[p, r] = c * arp - s * arq
                        A[q, r] = s * arp + c * arq
                    for r in range(n):
                        arp = A[r, p]
                        arq = A[r, q]
                        A[r, p] = c * arp - s * arq
                        A[r, q] = s * arp + c * arq
                    A[p, q] = 0.0
                    A[q, p] = 0.0
                    for r in range(n):
                        arp = V[r, p]
                        arq = V[r, q]
                        V[r, p] = c * arp - s * arq
                        V[r, q] = s * arp + c * arq
        else:
            sweep = -1
    return A_arr.diagonal().copy(), V_arr, sweep


def tridiag_solve(lower, diag, upper, rhs):
    """Batched Thomas solve along the last axis."""
    cdef cnp.ndarray[double, ndim=2] a = np.ascontiguousarray(np.atleast_2d(lower), dtype=float)
    cdef cnp.ndarray[double, ndim=2] b = np.ascontiguousarray(np.atleast_2d(diag), dtype=float)
    cdef cnp.ndarray[double, ndim=2] c = np.ascontiguousarray(np.atleast_2d(upper), dtype=float)
    shape = np.shape(rhs)
    cdef cnp.ndarray[double, ndim=2] d = np.array(np.atleast_2d(rhs), dtype=float, order="C")
    cdef Py_ssize_t m = d.shape[0], n = d.shape[1], i, k
    cdef cnp.ndarray[double, ndim=1] cp = np.empty(n)
    cdef double[:, ::1] av = a, bv = b, cv = c, dv = d
    cdef double[::1] cpv = cp
    cdef double den
    cdef Py_ssize_t ka
    cdef Py_ssize_t mb = b.shape[0]
    with nogil:
        for k in range(m):
            ka = k if mb > 1 else 0
            cpv[0] = cv[ka, 0] / bv[ka, 0]
            dv[k, 0] = dv[k, 0] / bv[ka, 0]
            for i in range(1, n):
                den = bv[ka, i] - av[ka, i] * cpv[i - 1]
                cpv[i] = cv[ka, i] / den
                dv[k, i] = (dv[k, i] - av[ka, i] * dv[k, i - 1]) / den
            for i in range(n - 2, -1, -1):
                dv[k, i] -= cpv[i] * dv[k, i + 1]
    return d.reshape(shape)
