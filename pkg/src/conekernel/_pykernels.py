"""Pure-Python/numpy implementations of the hot numerical kernels.

This module mirrors ``_ckernels.pyx`` function for function. It is used when
the compiled extension is unavailable or when ``CONEKERNEL_BACKEND=python``.

Backend functions never raise package exceptions; they report failure via
status values so the public wrappers decide what to raise.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

NAME = "python"

# Lanczos approximation, g = 671/128 with 14 terms (|rel err| < 2e-15 for x > 0)
_LANCZOS_G = 5.2421875
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEF = (
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005
_LOG_RESCALE = 280.0 * math.log(10.0)
_EPS = 2.220446049250313e-16

TS_TMAX = 4.5
TS_MIN_LEVEL = 3
TS_MAX_LEVEL = 12


def log_gamma(x: float) -> float:
    tmp = x + _LANCZOS_G
    tmp = (x + 0.5) * math.log(tmp) - tmp
    ser = _LANCZOS_C0
    y = x
    for c in _LANCZOS_COEF:
        y += 1.0
        ser += c / y
    return tmp + math.log(_SQRT_2PI * ser / x)


def log_gamma_many(xs):
    xs = np.asarray(xs, dtype=float)
    return np.array([log_gamma(float(x)) for x in xs.ravel()]).reshape(xs.shape)


def log_bessel_i_series(mu: float, z: float, max_terms: int = 0):
    """Return ``(log I_mu(z), ok)`` from the ascending power series."""
    if max_terms <= 0:
        max_terms = 1000 + int(4.0 * z)
    x = 0.25 * z * z
    total = 1.0
    term = 1.0
    log_scale = 0.0
    j = 0
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
            return math.nan, False
    log_t0 = mu * math.log(0.5 * z) - log_gamma(mu + 1.0)
    return log_t0 + log_scale + math.log(total), True


@lru_cache(maxsize=None)
def ts_nodes(level: int, tmax: float = TS_TMAX):
    """Tanh-sinh nodes on [-1, 1] at step ``2**-level``, truncated at ``|t| <= tmax``.

    Returns ``(u, dist_left, dist_right, weight)`` where the distances to the
    endpoints are computed without cancellation.
    """
    h = 2.0 ** -level
    k = np.arange(-int(tmax / h), int(tmax / h) + 1)
    t = k * h
    v = 0.5 * math.pi * np.sinh(t)
    u = np.tanh(v)
    dr = 2.0 / (1.0 + np.exp(2.0 * v))
    dl = 2.0 / (1.0 + np.exp(-2.0 * v))
    w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(v) ** 2
    return u, dl, dr, w


def tanh_sinh(f, a: float, b: float, rtol: float = 1e-13, atol: float = 0.0,
              max_level: int = TS_MAX_LEVEL, tmax: float = TS_TMAX):
    """Integrate a vectorized ``f(x, dist_a, dist_b)`` over [a, b].

    ``f`` may return shape ``(nodes,)`` or ``(nodes, k)``. A larger ``tmax``
    (at most 6) reaches closer to the endpoints for strong singularities. Returns
    ``(value, err, abs_value, level)``; ``err`` is the difference between the
    last two levels, ``abs_value`` the integral of ``|f|``.
    """
    half = 0.5 * (b - a)
    prev = None
    for level in range(TS_MIN_LEVEL, max_level + 1):
        u, dl, dr, w = ts_nodes(level, tmax)
        x = a + half * (1.0 + u)
        vals = np.asarray(f(x, half * dl, half * dr), dtype=float)
        ww = w if vals.ndim == 1 else w[:, None]
        est = half * np.sum(ww * vals, axis=0)
        mag = half * np.sum(ww * np.abs(vals), axis=0)
        if prev is not None:
            err = np.abs(est - prev)
            if np.all(err <= np.maximum(rtol * np.abs(est), np.maximum(atol, 64 * _EPS * mag))):
                return est, err, mag, level
        prev = est
    return est, err, mag, -1


def bessel_i_scaled_integral(mu: float, z: float):
    """Return ``(e^{-z} I_mu(z), err, abs_scale)`` from the trigonometric integral."""
    tmax = math.pi if z <= 350.0 else min(math.pi, math.pi * math.sqrt(345.0 / z))

    def first(tau, _da, _db):
        s = np.sin(0.5 * tau)
        env = np.exp(-2.0 * z * s * s)
        return np.stack([env * np.cos(mu * tau), env], axis=1)

    (v1, a1), (e1, _), _, lev1 = _split(tanh_sinh(first, 0.0, tmax, rtol=1e-15, atol=1e-300))
    value = v1 / math.pi
    err = e1 / math.pi
    scale = a1 / math.pi
    sin_mu_pi = 0.0 if mu == math.floor(mu) else math.sin(mu * math.pi)
    if sin_mu_pi != 0.0 and 2.0 * z < 745.0:
        t2 = math.acosh(1.0 + 745.0 / z)

        def second(tau, _da, _db):
            sh = np.sinh(0.5 * tau)
            return np.exp(-2.0 * z * sh * sh - mu * tau - 2.0 * z)

        v2, e2, a2, lev2 = tanh_sinh(second, 0.0, t2, rtol=1e-15, atol=1e-300)
        value -= sin_mu_pi / math.pi * float(v2)
        err += abs(sin_mu_pi) / math.pi * float(e2)
        scale += abs(sin_mu_pi) / math.pi * float(a2)
        if lev2 < 0:
            err = math.inf
    if lev1 < 0:
        err = math.inf
    err += 16.0 * _EPS * scale
    return value, err, scale


def _split(res):
    est, err, mag, level = res
    return (float(est[0]), float(est[1])), (float(err[0]), float(err[1])), float(mag[0]), level


def log_bessel_i(mu: float, z: float, rtol: float = 1e-12):
    """Return ``(log I_mu(z), status)``; status 0 series, 1 integral, -1 failed."""
    if z <= max(12.0, 1.5 * mu):
        val, ok = log_bessel_i_series(mu, z)
        if ok:
            return val, 0
    else:
        v, err, _ = bessel_i_scaled_integral(mu, z)
        if v > 0.0 and err <= rtol * v:
            return math.log(v) + z, 1
        # cancellation in the integral; the series is always sign-safe
        val, ok = log_bessel_i_series(mu, z, max_terms=100000 + int(10 * z))
        if ok:
            return val, 0
    return math.nan, -1


def log_bessel_i_many(mus, z: float, rtol: float = 1e-12):
    mus = np.asarray(mus, dtype=float)
    out = np.empty(mus.shape)
    failed = 0
    for i, mu in enumerate(mus.ravel()):
        v, st = log_bessel_i(float(mu), z, rtol)
        out.flat[i] = v
        failed += st < 0
    return out, failed


def jacobi_eigh(a, tol: float = 1e-14, max_sweeps: int = 60):
    """Symmetric eigendecomposition by parallel-ordered Jacobi rotations.

    Disjoint pivot pairs of a round-robin schedule are rotated together so each
    round is a handful of vectorized row/column updates.
    Returns ``(eigenvalues, eigenvectors, sweeps)``, unsorted.
    """
    A = np.array(a, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n == 1:
        return A.diagonal().copy(), V, 0
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        P, Q = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                P.append(min(p, q))
                Q.append(max(p, q))
        rounds.append((np.array(P), np.array(Q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    norm = np.sqrt(np.sum(A * A))
    diag_mask = np.eye(n, dtype=bool)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.sqrt(np.sum(A[~diag_mask] ** 2))
        if off <= tol * norm:
            return A.diagonal().copy(), V, sweeps - 1
        for P, Q in rounds:
            apq = A[P, Q]
            app = A[P, P]
            aqq = A[Q, Q]
            nz = apq != 0.0
            if sweeps > 3:
                tiny = (np.abs(app) + 100.0 * np.abs(apq) == np.abs(app)) & (
                    np.abs(aqq) + 100.0 * np.abs(apq) == np.abs(aqq))
                nz &= ~tiny
            theta = np.where(nz, (aqq - app) / np.where(nz, 2.0 * apq, 1.0), 0.0)
            t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(nz, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rp = A[P, :].copy()
            rq = A[Q, :].copy()
            A[P, :] = c[:, None] * rp - s[:, None] * rq
            A[Q, :] = s[:, None] * rp + c[:, None] * rq
            cp = A[:, P].copy()
            cq = A[:, Q].copy()
            A[:, P] = cp * c - cq * s
            A[:, Q] = cp * s + cq * c
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vp = V[:, P].copy()
            vq = V[:, Q].copy()
            V[:, P] = vp * c - vq * s
            V[:, Q] = vp * s + vq * c
    return A.diagonal().copy(), V, -1


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a batch of tridiagonal systems along the last axis (Thomas)."""
    d = np.array(rhs, dtype=float)
    a = np.broadcast_to(np.asarray(lower, dtype=float), d.shape)
    b = np.broadcast_to(np.asarray(diag, dtype=float), d.shape)
    c = np.broadcast_to(np.asarray(upper, dtype=float), d.shape)
    n = b.shape[-1]
    cp = np.empty(d.shape)
    dp = np.empty_like(d)
    cp[..., 0] = c[..., 0] / b[..., 0]
    dp[..., 0] = d[..., 0] / b[..., 0]
    for i in range(1, n):
        den = b[..., i] - a[..., i] * cp[..., i - 1]
        cp[..., i] = c[..., i] / den
        dp[..., i] = (d[..., i] - a[..., i] * dp[..., i - 1]) / den
    x = dp
    for i in range(n - 2, -1, -1):
        x[..., i] -= cp[..., i] * x[..., i + 1]
    return x
