import math

import numpy as np
import pytest

from chebcert.implicit import DEXTAR_ARM, DEXTAR_BASE, dextar_domain, dextar_h, dextar_home, dextar_target


def test_home_configuration():
    x = dextar_home()
    assert x[1] == pytest.approx(DEXTAR_ARM - math.sqrt(DEXTAR_ARM**2 - DEXTAR_BASE**2))
    np.testing.assert_allclose(dextar_h(x, [math.pi / 2, math.pi / 2]), 0.0, atol=1e-14)


def test_solve_satisfies_model():
    t = dextar_target(1)
    for x in ([1.0, 41.0], [0.0, 2.0], [40.0, 42.0], [40.0, 2.0]):
        th = t.solve(np.array(x))
        np.testing.assert_allclose(dextar_h(np.array(x), th), 0.0, atol=1e-12)


def test_gradient_against_differences():
    t = dextar_target(2)
    x = np.array([1.3, 40.6])
    h = 1e-5
    fd = [(t.value(x + h * e) - t.value(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(t.gradient(x), fd, rtol=1e-6)


def test_mirror_symmetry_of_derivatives():
    # reflecting x1 swaps the arms: theta2(x1, x2) = pi - theta1(-x1, x2)
    t1, t2 = dextar_target(1), dextar_target(2)
    x = np.array([0.0, 41.0])
    g1, g2 = t1.gradient(x), t2.gradient(x)
    assert g1[0] == pytest.approx(g2[0], rel=1e-8)
    assert g1[1] == pytest.approx(-g2[1], rel=1e-8)


def test_domain():
    d = dextar_domain()
    np.testing.assert_array_equal(d.lower, [0.0, 2.0])
    np.testing.assert_array_equal(d.upper, [40.0, 42.0])
