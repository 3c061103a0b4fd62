import math

import numpy as np
import pytest

from conekernel.errors import NonConvergence
from conekernel.quadrature import adaptive_gauss_legendre, composite_gauss_legendre, gauss_legendre_rule, tanh_sinh


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre_rule(8)
    for degree in range(16):
        exact = 0.0 if degree % 2 else 2.0 / (degree + 1)
        assert np.sum(w * x ** degree) == pytest.approx(exact, abs=1e-14)


def test_composite_rule_integrates_smooth_function():
    x, w = composite_gauss_legendre(0.0, 3.0, panels=6, order=12)
    assert np.sum(w * np.exp(-x) * np.cos(2 * x)) == pytest.approx(
        (1 - math.exp(-3) * (math.cos(6) - 2 * math.sin(6))) / 5, rel=1e-14)


def test_adaptive_handles_localized_peak():
    f = lambda x: 1.0 / (1e-4 + (x - 0.3) ** 2)
    exact = (math.atan(0.7 / 1e-2) + math.atan(0.3 / 1e-2)) / 1e-2
    value, err = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=1e-12)
    assert value == pytest.approx(exact, rel=1e-11)
    assert err < 1e-9 * exact


def test_adaptive_vector_valued():
    f = lambda x: np.stack([np.sin(x), np.cos(x)], axis=1)
    value, _ = adaptive_gauss_legendre(f, 0.0, math.pi, rtol=1e-12)
    assert value == pytest.approx([2.0, 0.0], abs=1e-12)


def test_adaptive_reports_nonconvergence():
    with pytest.raises(NonConvergence) as info:
        adaptive_gauss_legendre(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, rtol=1e-15, max_panels=64)
    assert info.value.error_estimate >= 0.0


def test_tanh_sinh_endpoint_singularity():
    # int_0^1 x^-1/2 (1 - x)^-1/2 dx = pi
    est, err = tanh_sinh(lambda x, da, db: da ** -0.5 * db ** -0.5, 0.0, 1.0, rtol=1e-13)
    assert float(est) == pytest.approx(math.pi, rel=1e-12)


def test_tanh_sinh_log_singularity():
    est, _ = tanh_sinh(lambda x, da, db: np.log(da), 0.0, 1.0, rtol=1e-13)
    assert float(est) == pytest.approx(-1.0, rel=1e-12)
