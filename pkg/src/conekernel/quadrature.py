"""Quadrature rules: tanh-sinh for endpoint singularities, Gauss-Legendre otherwise."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import _pykernels
from .errors import NonConvergence


@lru_cache(maxsize=64)
def gauss_legendre_rule(order: int):
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def composite_gauss_legendre(a: float, b: float, panels: int = 1, order: int = 16):
    """Nodes and weights of a composite rule with ``panels`` equal panels on [a, b]."""
    x, w = gauss_legendre_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _panel_integrals(f, lo, hi, x, w):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(nodes.ravel()), dtype=float)
    vals = vals.reshape((lo.size, x.size) + vals.shape[1:])
    weighted = np.tensordot(w, np.moveaxis(vals, 1, 0), axes=(0, 0))
    return weighted * half.reshape((-1,) + (1,) * (weighted.ndim - 1))


def adaptive_gauss_legendre(f, a: float, b: float, rtol: float = 1e-10, atol: float = 0.0,
                            order: int = 16, initial_panels: int = 8,
                            max_panels: int = 20000):
    """Globally adaptive composite Gauss-Legendre quadrature.

    Panels whose value changes by more than their share of the tolerance when
    bisected are split again. ``f`` takes a 1-D array of nodes and returns an
    array of shape ``(nodes,)`` or ``(nodes, k)``; the result has shape ``()``
    or ``(k,)`` and every component must meet the tolerance.

    Returns
    -------
    value, error_estimate
    """
    if b == a:
        probe = np.asarray(f(np.array([a])), dtype=float)
        zero = np.zeros(probe.shape[1:])
        return zero, zero
    x, w = gauss_legendre_rule(order)
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    current = _panel_integrals(f, lo, hi, x, w)
    done = np.zeros(current.shape[1:])
    done_err = np.zeros(current.shape[1:])
    length = abs(b - a)
    used = lo.size
    while lo.size:
        mid = 0.5 * (lo + hi)
        halves = _panel_integrals(f, np.concatenate([lo, mid]), np.concatenate([mid, hi]), x, w)
        left, right = halves[:lo.size], halves[lo.size:]
        fine = left + right
        err = np.abs(fine - current)
        total = done + fine.sum(axis=0)
        tol = np.maximum(atol, rtol * np.abs(total))
        share = (np.abs(hi - lo) / length).reshape((-1,) + (1,) * (err.ndim - 1))
        ok = err <= np.maximum(tol * share, 1e-15 * np.abs(fine))
        if err.ndim > 1:
            ok = ok.reshape(ok.shape[0], -1).all(axis=1)
        done = done + fine[ok].sum(axis=0)
        done_err = done_err + err[ok].sum(axis=0)
        bad = ~ok
        used += 2 * int(bad.sum())
        if used > max_panels:
            pending = err[bad].sum(axis=0)
            raise NonConvergence("adaptive Gauss-Legendre exceeded its panel budget",
                                 float(np.max(done_err + pending)))
        lo = np.concatenate([lo[bad], mid[bad]])
        hi = np.concatenate([mid[bad], hi[bad]])
        current = np.concatenate([left[bad], right[bad]])
    return done, done_err


def tanh_sinh(f, a: float, b: float, rtol: float = 1e-13, atol: float = 0.0):
    """Double-exponential quadrature of ``f(x, dist_a, dist_b)`` over [a, b].

    The integrand also receives the distances to both endpoints, computed
    without cancellation, so singular factors such as ``(b - x)**p`` can be
    evaluated accurately next to the endpoint.

    Raises
    ------
    NonConvergence
        If the finest level still disagrees with the previous one.
    """
    est, err, _, level = _pykernels.tanh_sinh(f, a, b, rtol=rtol, atol=atol)
    if level < 0:
        raise NonConvergence("tanh-sinh quadrature did not converge", float(np.max(err)))
    return est, err
