"""Bessel functions of real order and the log-gamma function.

The modified Bessel function is always produced in logarithmic or
exponentially scaled form so callers can combine it with Gaussian prefactors
before exponentiating.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _backend, _pykernels
from .errors import BesselOverflow, NonConvergence

_LOG_MAX = math.log(np.finfo(float).max)
_LOG_SQRT_PI = 0.5 * math.log(math.pi)
_J_SWITCH = 8.0
_J_CHUNK = 64


class BesselValue(NamedTuple):
    """A modified Bessel value; ``scaled`` means ``value == exp(-z) * I_mu(z)``."""

    value: float
    scaled: bool


def _check_order(mu: float, z: float) -> None:
    if not (mu >= 0.0) or not math.isfinite(mu):
        raise ValueError(f"order must be finite and >= 0, got {mu}")
    if not (z >= 0.0) or not math.isfinite(z):
        raise ValueError(f"argument must be finite and >= 0, got {z}")


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0`` (Lanczos approximation)."""
    if not (x > 0.0) or not math.isfinite(x):
        raise ValueError(f"log_gamma needs a finite positive argument, got {x}")
    return float(_backend.kernels.log_gamma(float(x)))


def log_bessel_i(mu: float, z: float, rtol: float = 1e-12) -> float:
    """``log I_mu(z)`` for ``mu >= 0`` and ``z >= 0``.

    Uses the ascending series for ``z <= max(12, 1.5 mu)`` and quadrature of
    the integral representation otherwise, with the series as a fallback when
    the quadrature loses accuracy to cancellation.

    Raises
    ------
    NonConvergence
        If neither representation reaches the tolerance.
    """
    _check_order(mu, z)
    if z == 0.0:
        return 0.0 if mu == 0.0 else -math.inf
    value, status = _backend.kernels.log_bessel_i(float(mu), float(z), rtol)
    if status < 0:
        raise NonConvergence(f"I_{mu}({z}): no representation converged")
    return float(value)


def log_bessel_i_many(mus, z: float, rtol: float = 1e-12) -> np.ndarray:
    """Vectorized :func:`log_bessel_i` over an array of orders at one argument."""
    mus = np.asarray(mus, dtype=float)
    if mus.size and (np.min(mus) < 0.0 or not np.all(np.isfinite(mus))):
        raise ValueError("orders must be finite and >= 0")
    _check_order(0.0, z)
    if z == 0.0:
        return np.where(mus == 0.0, 0.0, -np.inf)
    out, failed = _backend.kernels.log_bessel_i_many(mus, float(z), rtol)
    if failed:
        raise NonConvergence(f"{failed} Bessel orders did not converge at z={z}")
    return np.asarray(out, dtype=float).reshape(mus.shape)


def bessel_i_scaled(mu: float, z: float, rtol: float = 1e-12) -> float:
    """``exp(-z) I_mu(z)``, which lies in ``(0, 1]`` for ``mu >= 0``."""
    return math.exp(log_bessel_i(mu, z, rtol) - z)


def bessel_i(mu: float, z: float, scaled: bool = False) -> BesselValue:
    """``I_mu(z)`` as a :class:`BesselValue`; raises :class:`BesselOverflow` if unscaled overflows."""
    log_i = log_bessel_i(mu, z)
    if scaled:
        return BesselValue(math.exp(log_i - z), True)
    if log_i > _LOG_MAX:
        raise BesselOverflow(f"I_{mu}({z}) overflows", log_i)
    return BesselValue(math.exp(log_i), False)


def log_bessel_i_rough_bound(mu, z):
    """Log of ``sqrt(pi) e^z (z/2)^mu / Gamma(mu + 1/2)``, an upper bound for ``I_mu(z)``.

    Accepts scalars or arrays of orders.
    """
    mu_arr = np.asarray(mu, dtype=float)
    lg = _backend.kernels.log_gamma_many(mu_arr + 0.5)
    out = _LOG_SQRT_PI + z + mu_arr * math.log(0.5 * z) - lg
    return float(out) if np.ndim(out) == 0 else out


def bessel_i_rough_bound(mu: float, z: float) -> float:
    """``sqrt(pi) e^z (z/2)^mu / Gamma(mu + 1/2)``.

    Raises
    ------
    BesselOverflow
        If the bound is not representable; use :func:`log_bessel_i_rough_bound`.
    """
    _check_order(mu, z)
    if z == 0.0:
        return math.sqrt(math.pi) / math.gamma(mu + 0.5) if mu == 0.0 else 0.0
    log_b = log_bessel_i_rough_bound(mu, z)
    if log_b > _LOG_MAX:
        raise BesselOverflow(f"rough bound for I_{mu}({z}) overflows", log_b)
    return math.exp(log_b)


def _poisson_integral(mu: float, x: np.ndarray, rtol: float):
    """``int_0^1 (1 - s^2)^(mu - 1/2) cos(x s) ds`` for a block of arguments.

    For a negative exponent the value of the smooth factor at ``s = 1`` is
    subtracted and integrated exactly, leaving an integrand that vanishes at
    the endpoint.
    """
    p = mu - 0.5
    subtract = p < 0.0
    at_one = 2.0 ** p * np.cos(x)

    def integrand(s, _da, db):
        smooth = np.exp(p * np.log1p(s))[:, None] * np.cos(s[:, None] * x[None, :])
        if subtract:
            smooth = smooth - at_one[None, :]
        return np.exp(p * np.log(db))[:, None] * smooth

    est, err, _, level = _pykernels.tanh_sinh(integrand, 0.0, 1.0, rtol=rtol, atol=0.0)
    if level < 0:
        raise NonConvergence(f"J_{mu}: Poisson integral did not converge", float(np.max(err)))
    return est + at_one / (p + 1.0) if subtract else est


def _hankel_integral(mu: float, x: np.ndarray, rtol: float):
    """``J_mu(x)`` as the real part of the first Hankel function, large ``x``.

    Uses ``H1 = sqrt(2/(pi x)) e^{i phi} / Gamma(mu+1/2) int_0^inf e^{-u}
    u^(mu-1/2) (1 + i u/(2x))^(mu-1/2) du`` with ``phi = x - mu pi/2 - pi/4``.
    The integrand does not oscillate, so there is no cancellation at large x.
    """
    p = mu - 0.5
    upper = 60.0 + 10.0 * max(p, 0.0)

    subtract = p < 0.0

    def integrand(u, da, _db):
        ratio = u[:, None] / (2.0 * x[None, :])
        mag = np.exp(-u[:, None] + 0.5 * p * np.log1p(ratio * ratio))
        ang = p * np.arctan(ratio)
        re_part, im_part = mag * np.cos(ang), mag * np.sin(ang)
        if subtract:
            # the smooth factor equals 1 at u = 0; its singular share is exact
            re_part = re_part - 1.0
        power = np.exp(p * np.log(da))[:, None]
        return np.concatenate([power * re_part, power * im_part], axis=1)

    est, err, _, level = _pykernels.tanh_sinh(integrand, 0.0, upper, rtol=rtol, atol=0.0)
    if level < 0:
        raise NonConvergence(f"J_{mu}: Hankel integral did not converge", float(np.max(err)))
    re_part, im_part = est[: x.size], est[x.size:]
    if subtract:
        re_part = re_part + upper ** (p + 1.0) / (p + 1.0)
    phi = x - 0.5 * math.pi * mu - 0.25 * math.pi
    amp = np.sqrt(2.0 / (math.pi * x)) * math.exp(-log_gamma(mu + 0.5))
    return amp * (np.cos(phi) * re_part - np.sin(phi) * im_part)


def bessel_j(mu: float, x, rtol: float = 1e-12):
    """Bessel function of the first kind ``J_mu(x)`` for ``mu > -1/2`` and ``x >= 0``.

    Evaluates the Poisson integral with tanh-sinh quadrature, which absorbs the
    endpoint singularity of the weight when ``mu < 1/2``. For large ``x`` the
    Poisson integral cancels badly, so a non-oscillatory Hankel-type integral
    takes over. Accepts scalar or array ``x``. Relative accuracy is about
    ``1e-9`` for ``x <= 200`` away from the zeros of ``J_mu``.
    """
    if not (mu > -0.5) or not math.isfinite(mu):
        raise ValueError(f"order must exceed -1/2, got {mu}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or not np.all(np.isfinite(xa)):
        raise ValueError("bessel_j needs finite x >= 0")
    flat = xa.ravel()
    out = np.empty(flat.shape)
    zero = flat == 0.0
    out[zero] = 1.0 if mu == 0.0 else 0.0
    pos = np.nonzero(~zero)[0]
    if pos.size:
        xs = flat[pos]
        # group arguments of similar size so each group converges at the same level
        bins = np.floor(np.log2(np.maximum(xs, 0.5))).astype(int)
        log_norm = math.log(2.0) - _LOG_SQRT_PI - log_gamma(mu + 0.5)
        far = xs > _J_SWITCH + 0.5 * mu
        bins[far] = np.iinfo(int).max
        for b in np.unique(bins):
            idx = np.nonzero(bins == b)[0]
            for start in range(0, idx.size, _J_CHUNK):
                sel = idx[start:start + _J_CHUNK]
                if b == np.iinfo(int).max:
                    out[pos[sel]] = _hankel_integral(mu, xs[sel], rtol)
                else:
                    integral = _poisson_integral(mu, xs[sel], rtol)
                    scale = np.exp(log_norm + mu * np.log(0.5 * xs[sel]))
                    out[pos[sel]] = scale * integral
    return float(out[0]) if xa.ndim == 0 else out.reshape(xa.shape)
