"""Points of the cone C(Y), the cone distance, and integration over the cone."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import InvalidPoint, TailTooLarge
from .quadrature import composite_gauss_legendre
from .cross_section import CrossSection


@dataclass(frozen=True)
class ConePoint:
    """A point ``(r, y)`` with ``r > 0``; ``y`` is interpreted by the cross-section."""

    r: float
    y: Any

    def __post_init__(self):
        r = float(self.r)
        if not (r > 0.0 and math.isfinite(r)):
            raise InvalidPoint(f"radial coordinate must be finite and > 0 (cone tip excluded), got {self.r}")
        object.__setattr__(self, "r", r)

    def scaled(self, factor: float) -> "ConePoint":
        """The point ``(factor * r, y)``."""
        return ConePoint(self.r * factor, self.y)


def cone_distance_dh(r, s, dh):
    """Cone distance from radii and section distance; vectorized.

    ``sqrt(r^2 + s^2 - 2 r s cos dh)`` for ``dh <= pi`` and ``r + s`` beyond.
    The first form is written as ``sqrt((r - s)^2 + 4 r s sin^2(dh/2))`` to
    avoid cancellation for nearby points.
    """
    r, s, dh = np.broadcast_arrays(np.asarray(r, float), np.asarray(s, float), np.asarray(dh, float))
    near = np.sqrt((r - s) ** 2 + 4.0 * r * s * np.sin(0.5 * np.minimum(dh, math.pi)) ** 2)
    out = np.where(dh >= math.pi, r + s, near)
    return float(out) if out.ndim == 0 else out


def cone_distance(p: ConePoint, q: ConePoint, section: CrossSection) -> float:
    """Distance between two cone points over ``section``."""
    return float(cone_distance_dh(p.r, q.r, section.distance(p.y, q.y)))


def default_radial_cut(r: float, s: float, t: float) -> float:
    """Radial cut ``max(r, s) + 12 sqrt(t)`` leaving Gaussian tails below about 1e-14."""
    return max(r, s) + 12.0 * math.sqrt(t)


def integrate_over_cone(f: Callable, section: CrossSection, R: float, radial_panels: int = 16,
                        radial_order: int = 16, section_size: int = 64, tol: float = 1e-10,
                        vectorized: bool = False) -> float:
    """Integrate ``f`` over ``(0, R) x Y`` with the cone measure ``s^(n-1) ds dh``.

    Gauss-Legendre panels in ``s`` are combined with the section's own
    quadrature (trapezoid on the circle, product grid on spheres, node
    weights for matrix sections).

    Parameters
    ----------
    f : callable
        ``f(ConePoint) -> float``; with ``vectorized=True`` instead
        ``f(s, ys) -> array (len(s), len(ys))`` for radii ``s`` and a section
        point array ``ys``.
    tol : float
        The integrand on the sphere ``s = R``, weighted by ``R^(n-1) |Y|``, must
        not exceed ``tol`` times the integral (or ``tol`` when it is zero).

    Raises
    ------
    TailTooLarge
        If the integrand has not decayed by ``R``.
    """
    if not R > 0.0:
        raise ValueError(f"radial cut must be positive, got {R}")
    s, ws = composite_gauss_legendre(0.0, R, radial_panels, radial_order)
    ys, wy = section.quadrature(section_size)
    n = section.n
    if vectorized:
        vals = np.asarray(f(s, ys), dtype=float)
        edge = np.asarray(f(np.array([R]), ys), dtype=float)
    else:
        pts = list(ys)
        vals = np.array([[f(ConePoint(si, y)) for y in pts] for si in s], dtype=float)
        edge = np.array([[f(ConePoint(R, y)) for y in pts]], dtype=float)
    total = float(np.sum((ws * s ** (n - 1))[:, None] * vals * wy[None, :]))
    boundary = float(np.max(np.abs(edge))) * R ** (n - 1) * float(np.sum(wy))
    if boundary > tol * max(abs(total), 1.0 if total == 0.0 else 0.0):
        raise TailTooLarge(f"integrand at R={R} is {boundary:.3e}, above {tol:g} x |integral| ({abs(total):.3e})")
    return total
