"""Independent reference computations for the series kernel.

* Weber's second exponential integral, in closed form and by quadrature.
* The Hankel transform of order ``mu`` adapted to dimension ``n``.
* A Crank-Nicolson finite-volume solver for the heat equation on a 2-D cone
  over a circle, spectral in the angle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .errors import GridTooCoarse, NonConvergence
from .cone_geometry import ConePoint
from .heat_kernel import HeatKernelEvaluator, format_float
from .quadrature import adaptive_gauss_legendre
from .cross_section import CircleSection
from .special_functions import bessel_j, log_bessel_i, log_gamma


# Weber's integral -----------------------------------------------------------------

def weber_closed_form(t: float, r: float, s: float, mu: float) -> float:
    """``(2t)^-1 exp(-(r^2 + s^2)/4t) I_mu(rs/2t)``, assembled in log space."""
    if not (t > 0.0 and r > 0.0 and s > 0.0):
        raise ValueError("t, r, s must be positive")
    z = r * s / (2.0 * t)
    return math.exp(-math.log(2.0 * t) - (r - s) ** 2 / (4.0 * t) + log_bessel_i(mu, z) - z)


def weber_cutoff(t: float, r: float, s: float) -> float:
    """Upper integration limit ``sqrt(40/t) + 10 max(1/r, 1/s)``."""
    return math.sqrt(40.0 / t) + 10.0 * max(1.0 / r, 1.0 / s)


def weber_quadrature(t: float, r: float, s: float, mu: float, rtol: float = 1e-9,
                     return_error: bool = False):
    """``int_0^inf exp(-t rho^2) J_mu(r rho) J_mu(s rho) rho d rho`` by adaptive quadrature.

    The integral is cut at :func:`weber_cutoff`; since ``|J_mu| <= 1`` the
    omitted part is at most ``exp(-t rho_max^2) / 2t``, which is added to the
    error estimate.

    Raises
    ------
    NonConvergence
        If the estimated error exceeds ``rtol`` times the value.
    """
    if not (t > 0.0 and r > 0.0 and s > 0.0):
        raise ValueError("t, r, s must be positive")
    if mu < 0.0:
        raise ValueError("order must be >= 0")
    rho_max = weber_cutoff(t, r, s)

    def integrand(rho):
        return np.exp(-t * rho * rho) * bessel_j(mu, r * rho) * bessel_j(mu, s * rho) * rho

    value, err = adaptive_gauss_legendre(integrand, 0.0, rho_max, rtol=0.1 * rtol)
    value = float(value)
    err = float(err) + math.exp(-t * rho_max ** 2) / (2.0 * t)
    if err > rtol * abs(value):
        raise NonConvergence(f"Weber quadrature at (t, r, s, mu)=({t}, {r}, {s}, {mu})", err)
    return (value, err) if return_error else value


# Hankel transform -------------------------------------------------------------------

def _radial_extent(f: Callable, n: int) -> tuple[float, float]:
    probe = np.geomspace(1e-3, 1e4, 561)
    g = np.abs(np.asarray(f(probe), dtype=float)) * probe ** (n - 1)
    peak = float(np.max(g))
    if peak == 0.0:
        return 0.0, 0.0
    significant = np.nonzero(g > 1e-17 * peak)[0]
    return max(1.0, 1.5 * float(probe[significant[-1]])), peak


def hankel_kernel(mu: float, x, beta: float):
    """``x^-beta J_mu(x)`` with its limit at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    zero = x == 0.0
    if np.any(zero):
        if mu > beta:
            out[zero] = 0.0
        elif mu == beta:
            out[zero] = math.exp(-mu * math.log(2.0) - log_gamma(mu + 1.0))
        else:
            out[zero] = math.inf
    if np.any(~zero):
        xs = x[~zero]
        out[~zero] = bessel_j(mu, xs) * xs ** (-beta)
    return out


def hankel_transform(f: Callable, mu: float, rho, n: int = 2, r_max: float | None = None,
                     rtol: float = 1e-10, atol: float | None = None) -> np.ndarray:
    """``(H_mu f)(rho) = int_0^inf (r rho)^-(n-2)/2 J_mu(r rho) f(r) r^(n-1) dr``.

    ``f`` must accept an array of radii. The integral is cut where
    ``|f(r)| r^(n-1)`` has dropped below ``1e-17`` of its peak, unless
    ``r_max`` is given.

    The error target for each ``rho`` is ``max(rtol * |value|, atol)``. By
    default ``atol`` is ``rtol`` times ``r_max`` times the peak of
    ``|f(r)| r^(n-1)``, the natural size of the transform, so values far
    below that size are not chased to full relative accuracy.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    beta = 0.5 * (n - 2)
    extent, peak = _radial_extent(f, n)
    if peak == 0.0:
        return np.zeros(rho.shape)
    if r_max is None:
        r_max = extent
    if atol is None:
        atol = rtol * r_max * peak

    def integrand(r):
        kern = hankel_kernel(mu, np.outer(r, rho), beta)
        fr = np.asarray(f(r), dtype=float) * r ** (n - 1)
        return kern * fr[:, None]

    value, _ = adaptive_gauss_legendre(integrand, 0.0, r_max, rtol=rtol, atol=atol,
                                       initial_panels=16)
    return np.asarray(value).reshape(rho.shape)


# finite-difference oracle ---------------------------------------------------------

@dataclass(frozen=True)
class RadialGrid:
    """Cell-centred radial nodes on ``(0, r_max)`` with a Dirichlet wall at ``r_max``.

    Faces sit at 0, at the midpoints between nodes, and at ``r_max``. With
    ``spacing="uniform"`` the nodes are ``r_min + i h`` and the last node is
    ``h/2`` inside the wall; :meth:`uniform` picks ``r_min = h/2`` so every
    cell is centred. ``"geometric"`` nodes grow by a constant ratio.
    """

    r_min: float
    r_max: float
    count: int
    spacing: str = "uniform"

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.count < 16:
            raise ValueError(f"radial grid needs at least 16 nodes, got {self.count}")
        if self.spacing not in ("uniform", "geometric"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    @classmethod
    def uniform(cls, r_max: float, count: int) -> "RadialGrid":
        return cls(0.5 * r_max / count, r_max, count, "uniform")

    @property
    def nodes(self) -> np.ndarray:
        if self.spacing == "uniform":
            h = (self.r_max - self.r_min) / (self.count - 0.5)
            return self.r_min + h * np.arange(self.count)
        return np.geomspace(self.r_min, self.r_max, self.count + 1)[:-1]

    @property
    def faces(self) -> np.ndarray:
        r = self.nodes
        return np.concatenate([[0.0], 0.5 * (r[:-1] + r[1:]), [self.r_max]])

    @property
    def volumes(self) -> np.ndarray:
        """``int r dr`` over each cell."""
        f = self.faces
        return 0.5 * (f[1:] ** 2 - f[:-1] ** 2)


@dataclass
class FDSolution:
    """Snapshots ``u(t, r_i, theta_j)`` of a finite-volume run on a 2-D cone."""

    times: np.ndarray
    grid: RadialGrid
    theta: np.ndarray
    values: np.ndarray
    L: float
    a: float
    n: int = 2
    steps: int = 0
    dt: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def mass(self, index: int = -1) -> float:
        """``int u dx`` over the cone for snapshot ``index``."""
        return float(np.sum(self.grid.volumes[:, None] * self.values[index]) * (self.L / self.theta.size))

    def write_csv(self, path, index: int = -1) -> None:
        """Export snapshot ``index`` as rows ``r, theta, u``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["r", "theta", "u"])
            for i, ri in enumerate(self.r):
                for j, th in enumerate(self.theta):
                    writer.writerow([format_float(ri), format_float(th),
                                     format_float(self.values[index, i, j])])


def _radial_operator(grid: RadialGrid, nu: np.ndarray):
    """Finite-volume radial operator for each order in ``nu``.

    Returns the stiffness diagonal and off-diagonal (shared by all orders)
    and a per-order potential weight array ``(len(nu), N)``. The potential
    weight of cell ``i`` is chosen so the discrete operator annihilates the
    regular solution ``r^nu`` of ``-(r u')'/r + nu^2 u / r^2 = 0``; it tends to
    ``nu^2 |cell| / r_i^2`` as the grid is refined, and it keeps the cells
    next to the origin consistent for non-integer orders.
    """
    r = grid.nodes
    f = grid.faces
    inner = f[1:-1] / np.diff(r)
    outer = grid.r_max / (grid.r_max - r[-1])
    diag = np.zeros(r.size)
    diag[:-1] += inner
    diag[1:] += inner
    diag[-1] += outer
    off = -inner
    nu = np.asarray(nu, dtype=float)[:, None]
    log_up = np.log(r[1:] / r[:-1])[None, :]
    weight = np.zeros((nu.shape[0], r.size))
    with np.errstate(over="ignore"):
        # flux of r^nu out through the upper face, relative to r_i^nu
        weight[:, :-1] += inner[None, :] * np.expm1(nu * log_up)
        # minus the flux in through the lower face, relative to r_i^nu
        weight[:, 1:] += inner[None, :] * np.expm1(-nu * log_up)
    # the outermost cell uses the continuum weight; its wall coupling sits in diag
    weight[:, -1] = nu[:, 0] ** 2 * grid.volumes[-1] / r[-1] ** 2
    return diag, off, weight


def kernel_seed(evaluator: HeatKernelEvaluator, t0: float, pole: ConePoint):
    """Seed callable ``(r, theta) -> u`` giving the series kernel at ``t0`` from ``pole``."""
    def seed(r, theta):
        return evaluator.evaluate_batch(t0, pole.r, pole.y, r, theta)
    return seed


def fd_heat_evolve(section: CircleSection, grid: RadialGrid, t0: float, t1: float, seed,
                   n_theta: int = 256, dt: float | None = None, rannacher_steps: int = 4,
                   snapshots: int = 0, n: int = 2) -> FDSolution:
    """Evolve ``du/dt = -L_V u`` on the cone over a circle from ``t0`` to ``t1``.

    The angle is handled by an FFT (each Fourier mode ``m`` sees the potential
    ``a + (2 pi m / L)^2``), the radius by cell-centred finite volumes with no
    flux through ``r = 0`` and ``u = 0`` at ``r_max``. Time stepping is
    Crank-Nicolson after ``rannacher_steps`` implicit-Euler half steps.

    Parameters
    ----------
    seed : callable or array
        ``seed(r_nodes, theta_nodes)`` returning ``(len(r), len(theta))`` values
        at ``t0``, or such an array.
    snapshots : int
        Number of intermediate snapshots to keep besides ``t0`` and ``t1``.

    Raises
    ------
    GridTooCoarse
        If the grid cannot resolve the seed or the time step is too long.
    """
    if n != 2:
        raise ValueError("the finite-volume oracle covers the 2-D cone only")
    if not 0.0 < t0 < t1:
        raise ValueError(f"need 0 < t0 < t1, got {t0}, {t1}")
    if n_theta < 8 or n_theta % 2:
        raise ValueError("n_theta must be even and >= 8")
    L, a = section.L, section.a
    r = grid.nodes
    theta = np.arange(n_theta) * (L / n_theta)
    u0 = np.asarray(seed(r, theta) if callable(seed) else seed, dtype=float)
    if u0.shape != (r.size, n_theta):
        raise ValueError(f"seed has shape {u0.shape}, expected {(r.size, n_theta)}")
    if dt is None:
        dt = min(1e-3, (t1 - t0) / 100.0)
    steps = max(2, int(math.ceil((t1 - t0) / dt - 1e-9)))
    dt = (t1 - t0) / steps
    _check_resolution(grid, u0, t0, dt)

    coef = np.fft.rfft(u0, axis=1)
    peak = float(np.max(np.abs(coef)))
    if peak > 0.0 and float(np.max(np.abs(coef[:, -1]))) > 1e-8 * peak:
        raise GridTooCoarse(f"{n_theta} angular nodes do not resolve the seed")
    modes = np.arange(coef.shape[1])
    nu2 = a + (2.0 * math.pi * modes / L) ** 2
    state = np.concatenate([coef.real.T, coef.imag.T])     # (2M, Nr)
    nu2 = np.concatenate([nu2, nu2])

    diag, off, potential = _radial_operator(grid, np.sqrt(nu2))
    vol = grid.volumes
    A_diag = diag[None, :] + potential
    off_full = np.zeros(r.size)
    off_full[:-1] = off

    def implicit(h):
        lower = np.concatenate([[0.0], off]) * h
        upper = off_full * h
        return (np.broadcast_to(lower, A_diag.shape), vol[None, :] + h * A_diag,
                np.broadcast_to(upper, A_diag.shape))

    def apply_explicit(x, h):
        y = (vol[None, :] - h * A_diag) * x
        y[:, 1:] -= h * off[None, :] * x[:, :-1]
        y[:, :-1] -= h * off[None, :] * x[:, 1:]
        return y

    solve = _backend.kernels.tridiag_solve
    keep = set(np.linspace(0, steps, snapshots + 2).round().astype(int).tolist())
    times, frames = [t0], [u0]

    def frame(x):
        M = coef.shape[1]
        return np.fft.irfft(x[:M].T + 1j * x[M:].T, n=n_theta, axis=1)

    be = implicit(0.5 * dt)
    cn_lhs = implicit(0.5 * dt)
    done = 0
    for _ in range(min(rannacher_steps, 2 * steps) // 2):
        for _half in range(2):
            state = solve(*be, vol[None, :] * state)
        done += 1
        if done in keep and done != steps:
            times.append(t0 + done * dt)
            frames.append(frame(state))
    while done < steps:
        state = solve(*cn_lhs, apply_explicit(state, 0.5 * dt))
        done += 1
        if done in keep and done != steps:
            times.append(t0 + done * dt)
            frames.append(frame(state))
    times.append(t1)
    frames.append(frame(state))
    return FDSolution(np.array(times), grid, theta, np.array(frames), L, a, 2, steps, dt,
                      {"rannacher_steps": rannacher_steps, "n_theta": n_theta})


def _check_resolution(grid: RadialGrid, u0: np.ndarray, t0: float, dt: float) -> None:
    profile = np.max(np.abs(u0), axis=1)
    peak = float(np.max(profile))
    if peak == 0.0:
        return
    r = grid.nodes
    spacing = np.diff(grid.faces)
    active = profile > 1e-8 * peak
    if float(np.max(spacing[active])) > math.sqrt(t0) / 3.0:
        raise GridTooCoarse(f"radial spacing {np.max(spacing[active]):.3g} does not resolve sqrt(t0)/3")
    edge = r > 0.95 * grid.r_max
    if np.any(edge) and float(np.max(profile[edge])) > 1e-10 * peak:
        raise GridTooCoarse("seed is not negligible near r_max; enlarge the radial domain")
    if dt > 0.05 * t0:
        raise GridTooCoarse(f"time step {dt:.3g} too long for t0={t0}")


def radial_mode_reference(coef_seed: np.ndarray, grid: RadialGrid, tau: float, nu: float) -> np.ndarray:
    """Evolve one radial Fourier coefficient exactly with the Bessel kernel.

    Returns ``int_0^inf k(tau, r, s) c(s) s ds`` at the grid nodes, where
    ``k = (2 tau)^-1 exp(-(r^2 + s^2)/4 tau) I_nu(rs/2 tau)`` and ``c`` is
    the seed coefficient sampled at the nodes (midpoint rule on the cells).
    """
    r = grid.nodes
    vol = grid.volumes
    out = np.zeros(r.shape, dtype=coef_seed.dtype)
    for i, ri in enumerate(r):
        k = np.array([weber_closed_form(tau, ri, sj, nu) for sj in r])
        out[i] = np.sum(k * vol * coef_seed)
    return out


@dataclass
class FDComparison:
    """Agreement of the finite-volume run with the series kernel at ``t1``."""

    max_rel_error: float
    points_compared: int
    threshold: float
    mass_t0: float
    mass_t1: float
    worst: tuple

    @property
    def mass_nonincreasing(self) -> bool:
        return self.mass_t1 <= self.mass_t0 * (1.0 + 1e-12)


def fd_versus_series(section: CircleSection, t0: float = 0.1, t1: float = 0.4,
                     pole: ConePoint | None = None, r_max: float = 8.0, nr: int = 800,
                     n_theta: int = 256, dt: float = 5e-4, threshold: float = 1e-6,
                     tol: float = 1e-10) -> tuple[FDComparison, FDSolution]:
    """Seed with the series kernel at ``t0``, evolve to ``t1``, compare with the series there."""
    ev = HeatKernelEvaluator(section, tol=tol)
    pole = pole or ConePoint(1.0, 0.0)
    grid = RadialGrid.uniform(r_max, nr)
    sol = fd_heat_evolve(section, grid, t0, t1, kernel_seed(ev, t0, pole), n_theta=n_theta, dt=dt)
    exact = ev.evaluate_batch(t1, pole.r, pole.y, sol.r, sol.theta)
    mask = exact > threshold
    rel = np.abs(sol.values[-1][mask] - exact[mask]) / exact[mask]
    idx = np.unravel_index(np.argmax(np.where(mask, np.abs(sol.values[-1] - exact) / np.where(mask, exact, 1.0), 0.0)),
                           exact.shape)
    cmp = FDComparison(float(rel.max()), int(mask.sum()), threshold, sol.mass(0), sol.mass(-1),
                       (float(sol.r[idx[0]]), float(sol.theta[idx[1]])))
    return cmp, sol
