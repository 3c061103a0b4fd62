import math

import mpmath
import numpy as np
import pytest

from conekernel import _backend
from conekernel.errors import BesselOverflow
from conekernel.special_functions import (
    BesselValue,
    bessel_i,
    bessel_i_rough_bound,
    bessel_i_scaled,
    bessel_j,
    log_bessel_i,
    log_bessel_i_many,
    log_bessel_i_rough_bound,
    log_gamma,
)

mpmath.mp.dps = 40


def ref_scaled_i(mu, z):
    return float(mpmath.besseli(mu, z) * mpmath.exp(-z))


# log gamma ------------------------------------------------------------------------
def test_log_gamma_special_values():
    assert abs(log_gamma(1.0)) < 1e-15
    assert abs(log_gamma(2.0)) < 1e-15
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)


@pytest.mark.parametrize("x", [1e-8, 0.01, 0.3, 0.5, 1.7, 3.0, 10.5, 77.7, 1e3, 1e6])
def test_log_gamma_against_reference(x):
    ref = float(mpmath.loggamma(x))
    assert abs(log_gamma(x) - ref) <= 1e-13 * max(1.0, abs(ref))


def test_log_gamma_recurrence_on_grid():
    for x in np.linspace(0.05, 60.0, 400):
        assert abs(log_gamma(x + 1.0) - log_gamma(x) - math.log(x)) < 1e-12 * max(1.0, log_gamma(x + 1.0))


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_rejects_outside_domain(bad):
    with pytest.raises(ValueError):
        log_gamma(bad)


# modified Bessel I ---------------------------------------------------------------------
def test_half_integer_closed_form():
    value = bessel_i_scaled(0.5, 1.0)
    assert value == pytest.approx(math.exp(-1.0) * math.sqrt(2.0 / math.pi) * math.sinh(1.0), rel=1e-12)
    for z in (0.01, 0.7, 5.0, 30.0, 400.0):
        exact = math.sqrt(2.0 / (math.pi * z)) * 0.5 * (-math.expm1(-2.0 * z))
        assert bessel_i_scaled(0.5, z) == pytest.approx(exact, rel=1e-10)


def test_i0_at_origin():
    assert log_bessel_i(0.0, 0.0) == 0.0
    assert bessel_i_scaled(0.0, 1e-12) == pytest.approx(1.0, rel=1e-12)
    assert log_bessel_i(1.5, 0.0) == -math.inf


@pytest.mark.parametrize("mu", [0.0, 0.25, 0.5, 1.0, 2.3, 3.7, 7.0, 10.0, 35.5, 120.0])
@pytest.mark.parametrize("z", [1e-6, 0.01, 0.5, 3.0, 11.9, 12.1, 40.0, 100.0, 700.0, 5000.0])
def test_scaled_i_against_reference(mu, z):
    assert bessel_i_scaled(mu, z) == pytest.approx(ref_scaled_i(mu, z), rel=1e-10)


def test_series_and_integral_branches_agree():
    kernels = _backend.kernels
    for mu in (0.0, 0.5, 1.0, 2.3, 3.7, 6.1, 10.0):
        for z in (13.0, 20.0, 40.0, 70.0, 100.0):
            series, ok = kernels.log_bessel_i_series(mu, z)
            assert ok
            integral, err, _ = kernels.bessel_i_scaled_integral(mu, z)
            assert math.exp(series - z) == pytest.approx(integral, rel=1e-8), (mu, z)


def test_scaled_values_in_unit_interval_and_decreasing_in_order():
    mus = np.linspace(0.0, 12.0, 49)
    for z in (0.05, 1.0, 9.0, 30.0, 250.0):
        vals = np.exp(log_bessel_i_many(mus, z) - z)
        assert np.all(vals > 0.0) and np.all(vals <= 1.0)
        assert np.all(np.diff(vals) < 0.0)


def test_many_matches_scalar():
    mus = np.array([0.0, 0.3, 2.0, 17.25])
    for z in (0.2, 15.0, 300.0):
        many = log_bessel_i_many(mus, z)
        assert np.allclose(many, [log_bessel_i(m, z) for m in mus], rtol=0, atol=1e-14 * (1 + z))


def test_bessel_i_value_wrapper_and_overflow():
    v = bessel_i(1.0, 2.0)
    assert isinstance(v, BesselValue) and not v.scaled
    assert v.value == pytest.approx(float(mpmath.besseli(1, 2)), rel=1e-12)
    s = bessel_i(1.0, 2000.0, scaled=True)
    assert s.scaled and 0.0 < s.value < 1.0
    with pytest.raises(BesselOverflow) as info:
        bessel_i(1.0, 2000.0)
    assert info.value.log_value == pytest.approx(log_bessel_i(1.0, 2000.0))
    assert isinstance(info.value, OverflowError)


@pytest.mark.parametrize("mu,z", [(-0.1, 1.0), (1.0, -1.0), (math.nan, 1.0), (1.0, math.inf)])
def test_bessel_i_rejects_bad_input(mu, z):
    with pytest.raises(ValueError):
        log_bessel_i(mu, z)


# rough bound -----------------------------------------------------------------------
def test_rough_bound_examples():
    assert bessel_i_rough_bound(0.5, 1.0) == pytest.approx(math.sqrt(math.pi) * math.e * math.sqrt(0.5), rel=1e-14)
    assert bessel_i_rough_bound(0.0, 0.1) == pytest.approx(math.exp(0.1), rel=1e-14)
    assert bessel_i_rough_bound(0.5, 1.0) >= bessel_i(0.5, 1.0).value


def test_rough_bound_dominates_on_grid():
    for mu in (0.0, 0.5, 1.0, 2.3, 7.0):
        for z in np.logspace(-2, 2, 41):
            assert log_bessel_i_rough_bound(mu, z) >= log_bessel_i(mu, z)


def test_rough_bound_overflow_is_signalled():
    with pytest.raises(BesselOverflow):
        bessel_i_rough_bound(0.0, 1000.0)
    assert math.isfinite(log_bessel_i_rough_bound(0.0, 1000.0))


# Bessel J --------------------------------------------------------------------------
def test_j_half_integer_closed_form():
    assert abs(bessel_j(0.5, math.pi)) < 1e-15
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(math.sqrt(2.0 / (math.pi * math.pi / 2)), rel=1e-12)
    x = np.linspace(0.1, 60.0, 300)
    exact = np.sqrt(2.0 / (math.pi * x)) * np.sin(x)
    assert np.max(np.abs(bessel_j(0.5, x) - exact) / np.sqrt(2.0 / (math.pi * x))) < 1e-10


def test_j_ode_residual():
    mu, x, h = 1.7, 3.3, 1e-3
    jm, j0, jp = bessel_j(mu, np.array([x - h, x, x + h]))
    d1 = (jp - jm) / (2 * h)
    d2 = (jp - 2 * j0 + jm) / (h * h)
    assert abs(x * x * d2 + x * d1 + (x * x - mu * mu) * j0) < 1e-5


@pytest.mark.parametrize("mu", [-0.45, -0.2, 0.0, 0.5, 1.0, 1.7, 2.3, 5.0, 10.0])
def test_j_against_reference_up_to_200(mu):
    x = np.concatenate([np.linspace(0.01, 20.0, 60), np.linspace(20.0, 200.0, 60)])
    got = bessel_j(mu, x)
    for xi, gi in zip(x, got):
        ref = float(mpmath.besselj(mu, xi))
        scale = abs(ref) if xi < mu else math.sqrt(2.0 / (math.pi * xi))
        assert abs(gi - ref) <= 1e-9 * scale, (mu, xi, gi, ref)


def test_j_scalar_and_origin():
    assert isinstance(bessel_j(1.0, 2.0), float)
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(2.0, 0.0) == 0.0


@pytest.mark.parametrize("mu,x", [(-0.5, 1.0), (-1.0, 1.0), (1.0, -0.5)])
def test_j_domain(mu, x):
    with pytest.raises(ValueError):
        bessel_j(mu, x)
