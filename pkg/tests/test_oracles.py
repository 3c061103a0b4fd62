import csv
import math

import numpy as np
import pytest

from conekernel.cone_geometry import ConePoint
from conekernel.cross_section import CircleSection
from conekernel.errors import GridTooCoarse
from conekernel.heat_kernel import HeatKernelEvaluator
from conekernel.oracles import (
    RadialGrid,
    _radial_operator,
    fd_heat_evolve,
    fd_versus_series,
    hankel_kernel,
    hankel_transform,
    kernel_seed,
    radial_mode_reference,
    weber_closed_form,
    weber_quadrature,
)
from conekernel.quadrature import composite_gauss_legendre
from conekernel.special_functions import bessel_j


# Weber ------------------------------------------------------------------------------
def test_weber_closed_form_half_integer():
    t, r, s = 0.7, 1.3, 0.4
    z = r * s / (2 * t)
    i_half = math.sqrt(2 / (math.pi * z)) * math.sinh(z)
    exact = math.exp(-(r * r + s * s) / (4 * t)) / (2 * t) * i_half
    assert weber_closed_form(t, r, s, 0.5) == pytest.approx(exact, rel=1e-13)


def test_weber_closed_form_symmetric_and_decaying():
    assert weber_closed_form(1.0, 0.3, 2.0, 1.7) == weber_closed_form(1.0, 2.0, 0.3, 1.7)
    mu, r = 1.0, 1.0
    for t in (1e2, 1e3, 1e4):
        leading = (1 / (2 * t)) * (r * r / (4 * t)) ** mu / math.gamma(mu + 1)
        assert weber_closed_form(t, r, r, mu) == pytest.approx(leading, rel=2e-2)


@pytest.mark.parametrize("t,r,s,mu", [(1, 1, 1, 0.5), (2, 0.5, 0.5, 0.0), (0.5, 1, 3, 2.3)])
def test_weber_quadrature_examples(t, r, s, mu):
    value, err = weber_quadrature(t, r, s, mu, return_error=True)
    exact = weber_closed_form(t, r, s, mu)
    assert value == pytest.approx(exact, rel=1e-6)
    assert abs(value - exact) <= max(err, 1e-12 * exact) * 10


def test_weber_rejects_bad_input():
    with pytest.raises(ValueError):
        weber_quadrature(0.0, 1, 1, 0)
    with pytest.raises(ValueError):
        weber_quadrature(1.0, 1, 1, -1)
    with pytest.raises(ValueError):
        weber_closed_form(1.0, 0.0, 1.0, 0)


# Hankel ------------------------------------------------------------------------------
def test_hankel_gaussian_self_reciprocal():
    rho = np.array([0.0, 0.5, 1.0, 2.0, 4.0])
    got = hankel_transform(lambda r: np.exp(-r * r), 0.0, rho, n=2)
    assert np.allclose(got, 0.5 * np.exp(-rho ** 2 / 4), rtol=1e-10, atol=1e-15)


def test_hankel_zero_function():
    assert np.all(hankel_transform(lambda r: np.zeros_like(r), 1.0, [0.5, 1.0]) == 0.0)


@pytest.mark.parametrize("mu,n", [(1.0, 2), (0.5, 3), (2.3, 3)])
def test_hankel_involution(mu, n):
    # transform once with the library, then apply the same transform to the
    # sampled result with a fixed composite rule and recover f
    beta = 0.5 * (n - 2)
    f = lambda r: r ** (mu - beta) * np.exp(-r * r)
    rho, w = composite_gauss_legendre(0.0, 14.0, panels=14, order=16)
    g = hankel_transform(f, mu, rho, n=n, rtol=1e-10)
    r = np.array([0.3, 0.8, 1.5])
    back = np.array([np.sum(w * hankel_kernel(mu, ri * rho, beta) * g * rho ** (n - 1)) for ri in r])
    assert np.allclose(back, f(r), rtol=1e-4)


def test_hankel_concentrates_on_frequency():
    mu, rho0 = 1.0, 3.0
    rho = np.linspace(0.5, 6.0, 23)
    sharpness = []
    for width in (2.0, 4.0, 8.0):
        f = lambda r, w=width: bessel_j(mu, rho0 * r) * np.exp(-(r / w) ** 2)
        h = np.abs(hankel_transform(f, mu, rho, n=2, r_max=7.0 * width, rtol=1e-8))
        near = np.abs(rho - rho0) <= 0.5
        sharpness.append(np.sum(h[near] ** 2) / np.sum(h ** 2))
    assert sharpness[0] < sharpness[1] < sharpness[2]
    assert sharpness[2] > 0.9


# finite-volume oracle --------------------------------------------------------------------
def test_radial_grid_invariants():
    with pytest.raises(ValueError):
        RadialGrid(1.0, 0.5, 32)
    with pytest.raises(ValueError):
        RadialGrid(0.1, 1.0, 8)
    g = RadialGrid.uniform(4.0, 64)
    assert np.all(np.diff(g.nodes) > 0) and g.faces[0] == 0.0 and g.faces[-1] == 4.0
    assert np.sum(g.volumes) == pytest.approx(8.0)
    geo = RadialGrid(0.01, 4.0, 64, "geometric")
    assert np.allclose(np.diff(np.log(geo.nodes)), np.log(geo.nodes[1] / geo.nodes[0]))


def test_zero_seed_stays_zero():
    sol = fd_heat_evolve(CircleSection(2 * math.pi, 1.0), RadialGrid.uniform(4.0, 64), 0.1, 0.2,
                         lambda r, th: np.zeros((r.size, th.size)), n_theta=16)
    assert np.all(sol.values == 0.0)


def test_resolution_heuristics():
    circle = CircleSection(2 * math.pi, 1.0)
    ev = HeatKernelEvaluator(circle)
    seed = kernel_seed(ev, 0.1, ConePoint(1.0, 0.0))
    with pytest.raises(GridTooCoarse):
        fd_heat_evolve(circle, RadialGrid.uniform(8.0, 32), 0.1, 0.2, seed, n_theta=64)
    with pytest.raises(GridTooCoarse):
        fd_heat_evolve(circle, RadialGrid.uniform(2.0, 200), 0.1, 0.2, seed, n_theta=64)
    with pytest.raises(GridTooCoarse):
        fd_heat_evolve(circle, RadialGrid.uniform(6.0, 400), 0.1, 0.2, seed, n_theta=8)
    with pytest.raises(GridTooCoarse):
        fd_heat_evolve(circle, RadialGrid.uniform(6.0, 400), 0.1, 0.2, seed, n_theta=64, dt=0.05)


def test_operator_exact_on_regular_power():
    grid = RadialGrid.uniform(3.0, 40)
    nu = np.array([0.3, 1.0, 2.7])
    diag, off, weight = _radial_operator(grid, nu)
    r = grid.nodes
    for k, v in enumerate(nu):
        u = r ** v
        Au = (diag + weight[k]) * u
        Au[1:] += off * u[:-1]
        Au[:-1] += off * u[1:]
        # zero in every cell that does not touch the outer wall
        assert np.max(np.abs(Au[:-1])) < 1e-10 * np.max(np.abs(diag * u))


def test_fourier_mode_matches_radial_bessel_kernel():
    circle = CircleSection(2 * math.pi, 1.0)
    ev = HeatKernelEvaluator(circle, tol=1e-12)
    grid = RadialGrid.uniform(6.0, 300)
    t0, t1, m = 0.1, 0.2, 2
    sol = fd_heat_evolve(circle, grid, t0, t1, kernel_seed(ev, t0, ConePoint(1.0, 0.0)), n_theta=128, dt=5e-4)
    c0 = np.fft.rfft(sol.values[0], axis=1)[:, m]
    c1 = np.fft.rfft(sol.values[-1], axis=1)[:, m]
    nu = math.sqrt(circle.a + (2 * math.pi * m / circle.L) ** 2)
    ref = radial_mode_reference(c0.real, grid, t1 - t0, nu)
    mask = np.abs(ref) > 1e-3 * np.max(np.abs(ref))
    assert np.max(np.abs(c1.real[mask] - ref[mask]) / np.abs(ref[mask])) < 1e-2


def test_fd_matches_series_on_2pi_circle(tmp_path):
    cmp, sol = fd_versus_series(CircleSection(2 * math.pi, 1.0), t0=0.1, t1=0.4)
    assert cmp.max_rel_error < 1e-2
    assert cmp.points_compared > 1000
    assert cmp.mass_nonincreasing
    path = tmp_path / "snap.csv"
    sol.write_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "theta", "u"]
    assert len(rows) == 1 + sol.r.size * sol.theta.size
    assert float(rows[1][2]) == sol.values[-1, 0, 0]


def test_snapshots_and_monotone_mass():
    circle = CircleSection(2 * math.pi, 1.0)
    ev = HeatKernelEvaluator(circle)
    sol = fd_heat_evolve(circle, RadialGrid.uniform(6.0, 200), 0.1, 0.3,
                         kernel_seed(ev, 0.1, ConePoint(1.0, 0.0)), n_theta=64, dt=2e-3, snapshots=5)
    assert sol.times[0] == 0.1 and sol.times[-1] == 0.3 and len(sol.times) == 7
    masses = [sol.mass(i) for i in range(len(sol.times))]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(masses, masses[1:]))
