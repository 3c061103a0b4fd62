"""Property-based checks of identities that hold for every admissible input."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from conekernel.cli import parse_grid
from conekernel.cone_geometry import ConePoint, cone_distance, cone_distance_dh
from conekernel.cross_section import CircleSection, SphereSection
from conekernel.heat_kernel import HeatKernelEvaluator, format_float
from conekernel.special_functions import bessel_i_scaled, log_gamma

FLAT = HeatKernelEvaluator(SphereSection(3, 0.0), tol=1e-12)
NEGATIVE = HeatKernelEvaluator(SphereSection(3, -0.125), tol=1e-12)
WIDE_CIRCLE = HeatKernelEvaluator(CircleSection(3 * math.pi, 1.0), tol=1e-12)

times = st.floats(0.05, 5.0)
radii = st.floats(0.05, 3.0)
unit = st.floats(0.0, 1.0)


def sphere_pair(ev, r, s, frac):
    y, y2 = ev.section.points_at_distance(frac * ev.section.diameter)
    return ConePoint(r, y), ConePoint(s, y2)


def resolved(ev, t, p, q):
    return ev.evaluate_full(t, p, q).roundoff < 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 150.0))
def test_log_gamma_recurrence(x):
    assert abs(log_gamma(x + 1.0) - log_gamma(x) - math.log(x)) <= 1e-13 * max(1.0, abs(log_gamma(x + 1.0)))


@settings(max_examples=150, deadline=None)
@given(st.floats(1.0, 30.0), st.floats(0.01, 60.0))
def test_bessel_i_three_term_recurrence(mu, z):
    lower, mid, upper = (bessel_i_scaled(m, z) for m in (mu - 1.0, mu, mu + 1.0))
    assert abs(lower - upper - 2.0 * mu / z * mid) <= 1e-10 * lower


@settings(max_examples=60, deadline=None)
@given(times, radii, radii, unit)
def test_kernel_symmetry(t, r, s, frac):
    for ev in (NEGATIVE, WIDE_CIRCLE):
        p, q = sphere_pair(ev, r, s, frac)
        a, b = ev.evaluate(t, p, q), ev.evaluate(t, q, p)
        assert abs(a - b) <= 1e-12 * abs(a)


@settings(max_examples=60, deadline=None)
@given(times, radii, radii, unit, st.floats(0.2, 5.0))
def test_scaling_covariance(t, r, s, frac, lam):
    p, q = sphere_pair(NEGATIVE, r, s, frac)
    if not resolved(NEGATIVE, t, p, q):
        return
    base = NEGATIVE.evaluate(t, p, q)
    scaled = NEGATIVE.evaluate(lam * lam * t, p.scaled(lam), q.scaled(lam)) * lam ** 3
    assert abs(scaled - base) <= 1e-10 * base


@settings(max_examples=80, deadline=None)
@given(times, radii, radii, unit)
def test_euclidean_reduction_and_bound_equality(t, r, s, frac):
    p, q = sphere_pair(FLAT, r, s, frac)
    res = FLAT.evaluate_full(t, p, q)
    d = cone_distance(p, q, FLAT.section)
    exact = (4 * math.pi * t) ** -1.5 * math.exp(-d * d / (4 * t))
    assert abs(res.value - exact) <= max(1e-9, 10 * res.roundoff) * exact
    # with sigma = 0 the Gaussian bound at C = (4 pi)^-3/2, c = 4 is the kernel itself
    bound = FLAT.gaussian_bound(t, p, q, (4 * math.pi) ** -1.5, 4.0)
    assert res.value <= bound * (1 + max(1e-9, 10 * res.roundoff))


@settings(max_examples=60, deadline=None)
@given(times, radii, radii, unit)
def test_positive_for_nonnegative_potential(t, r, s, frac):
    p, q = sphere_pair(WIDE_CIRCLE, r, s, frac)
    if resolved(WIDE_CIRCLE, t, p, q):
        assert WIDE_CIRCLE.evaluate(t, p, q) > 0.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50.0), unit)
def test_tail_nonincreasing(z, frac):
    p, q = sphere_pair(NEGATIVE, math.sqrt(2 * z), math.sqrt(2 * z), frac)
    tails = [NEGATIVE.truncation_tail(K, 1.0, p, q) for K in range(0, 60, 3)]
    assert all(b <= a for a, b in zip(tails, tails[1:]))


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 10), unit, unit, unit)
def test_cone_distance_triangle(r1, r2, r3, a1, a2, a3):
    sec = CircleSection(3 * math.pi, 1.0)
    p, q, w = (ConePoint(r, a * sec.L) for r, a in ((r1, a1), (r2, a2), (r3, a3)))
    assert cone_distance(p, q, sec) <= cone_distance(p, w, sec) + cone_distance(w, q, sec) + 1e-12
    assert math.isclose(cone_distance_dh(r1, r2, 0.0), abs(r1 - r2), abs_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8))
def test_grid_text_round_trips(values):
    assert parse_grid(",".join(format_float(v) for v in values)) == values


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 2), st.integers(0, 20))
def test_grid_range_endpoints(start, step, count):
    stop = start + count * step
    values = parse_grid(f"{format_float(start)}:{format_float(stop)}:{format_float(step)}")
    assert len(values) == count + 1
    assert np.allclose(values, start + step * np.arange(count + 1), atol=1e-9)
