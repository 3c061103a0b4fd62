import math

import numpy as np
import pytest

from conekernel.cone_geometry import (
    ConePoint,
    cone_distance,
    cone_distance_dh,
    default_radial_cut,
    integrate_over_cone,
)
from conekernel.cross_section import CircleSection, SphereSection, circle_matrix_section
from conekernel.errors import InvalidPoint, TailTooLarge
from conekernel.heat_kernel import HeatKernelEvaluator


def test_distance_examples():
    sphere = SphereSection(3, 0.0)
    y, y2 = sphere.points_at_distance(math.pi / 2)
    assert cone_distance(ConePoint(1, y), ConePoint(1, y2), sphere) == pytest.approx(math.sqrt(2))
    circle = CircleSection(4 * math.pi, 1.0)
    assert cone_distance(ConePoint(2, 0.0), ConePoint(3, 1.5 * math.pi), circle) == pytest.approx(5.0)
    assert cone_distance(ConePoint(2, y), ConePoint(2, y), sphere) == 0.0


def test_distance_continuous_at_pi():
    r, s = 1.3, 0.4
    below = cone_distance_dh(r, s, math.pi - 1e-12)
    assert below == pytest.approx(r + s, rel=1e-12)
    assert cone_distance_dh(r, s, math.pi) == r + s
    assert cone_distance_dh(r, s, 5.0) == r + s


def test_distance_accurate_for_nearby_points():
    d = cone_distance_dh(1.0, 1.0, 1e-9)
    assert d == pytest.approx(1e-9, rel=1e-12)


def test_distance_scaling_symmetry_and_triangle():
    rng = np.random.default_rng(3)
    circle = CircleSection(3 * math.pi, 1.0)
    for _ in range(300):
        p, q, w = (ConePoint(rng.uniform(0.01, 5), rng.uniform(0, circle.L)) for _ in range(3))
        dpq = cone_distance(p, q, circle)
        assert dpq == pytest.approx(cone_distance(q, p, circle), abs=1e-14)
        assert dpq <= cone_distance(p, w, circle) + cone_distance(w, q, circle) + 1e-12
        lam = rng.uniform(0.1, 10)
        assert cone_distance(p.scaled(lam), q.scaled(lam), circle) == pytest.approx(lam * dpq, rel=1e-12)


@pytest.mark.parametrize("r", [0.0, -1.0, math.nan, math.inf])
def test_cone_tip_excluded(r):
    with pytest.raises(InvalidPoint, match="cone tip"):
        ConePoint(r, 0.0)


def test_integrate_gaussian_circle():
    circle = CircleSection(2 * math.pi, 1.0)
    R = 7.0
    value = integrate_over_cone(lambda p: math.exp(-p.r ** 2), circle, R, section_size=8)
    assert value == pytest.approx(math.pi * (1 - math.exp(-R * R)), rel=1e-12)
    vec = integrate_over_cone(lambda s, ys: np.exp(-s[:, None] ** 2) * np.ones(len(ys)), circle, R,
                              vectorized=True)
    assert vec == pytest.approx(value, rel=1e-13)


def test_integrate_gaussian_sphere_is_euclidean_integral():
    value = integrate_over_cone(lambda s, ys: np.exp(-s[:, None] ** 2) * np.ones(len(ys)),
                                SphereSection(3, 0.0), 7.0, vectorized=True)
    assert value == pytest.approx(math.pi ** 1.5, rel=1e-12)


def test_integrate_zero_and_matrix_section():
    circle = CircleSection(2 * math.pi, 1.0)
    assert integrate_over_cone(lambda p: 0.0, circle, 3.0, section_size=4) == 0.0
    mat = circle_matrix_section(16, 2 * math.pi, 1.0)
    value = integrate_over_cone(lambda s, ys: np.exp(-s[:, None] ** 2) * np.ones(len(ys)), mat, 7.0,
                                vectorized=True)
    assert value == pytest.approx(math.pi, rel=1e-12)


def test_integrate_detects_untruncated_tail():
    with pytest.raises(TailTooLarge):
        integrate_over_cone(lambda p: math.exp(-p.r), CircleSection(2 * math.pi, 1.0), 5.0, section_size=4)
    with pytest.raises(ValueError):
        integrate_over_cone(lambda p: 1.0, CircleSection(2 * math.pi, 1.0), 0.0)


def test_kernel_mass_at_most_one():
    for section in (CircleSection(2 * math.pi, 1.0), SphereSection(3, 0.0), SphereSection(3, 1.0)):
        ev = HeatKernelEvaluator(section, tol=1e-12)
        y, _ = section.points_at_distance(0.0)
        t, r = 1.0, 1.0
        mass = integrate_over_cone(lambda s, ys: ev.evaluate_batch(t, r, y, s, ys), section,
                                   default_radial_cut(r, r, t), radial_panels=24, section_size=64,
                                   vectorized=True)
        assert 0.0 < mass <= 1.0 + 1e-10
        if isinstance(section, SphereSection) and section.a == 0.0:
            assert mass == pytest.approx(1.0, rel=1e-9)
