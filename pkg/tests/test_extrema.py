import numpy as np
import pytest

from chebcert.basis import BoxDomain, build_basis
from chebcert.extrema import (
    ExtremePoint,
    Signature,
    dedup,
    extended_signature,
    polish_extreme,
    set_valued_signature,
    signature_of,
)
from chebcert.target import HornerTarget, airy_target, interval_family_target, monomial_power_target, runge_target

D1 = BoxDomain.interval(-1, 1)


def test_polish_interior_and_boundary():
    b, t = build_basis(1, 1), monomial_power_target(2)
    e0 = polish_extreme(t, b, [0.5, 0.0], [0.1], D1)
    assert abs(e0.x[0]) < 1e-9 and e0.sign == 1 and e0.face_mask[0] == 0
    e1 = polish_extreme(t, b, [0.5, 0.0], [0.9], D1)
    assert e1.x[0] == 1.0 and e1.sign == -1 and e1.face_mask[0] == 1
    assert e1.error == pytest.approx(-0.5)


def test_polish_runge_center_is_stationary():
    b = build_basis(2, 1)
    e = polish_extreme(runge_target(2), b, [0.3, 0.0, 0.0], [0.05, 0.08], BoxDomain(-np.ones(2), np.ones(2)))
    np.testing.assert_allclose(e.x, [0.0, 0.0], atol=1e-8)
    assert e.stationarity <= 1e-10


def test_dedup_merges_close_points_per_sign():
    pts = [ExtremePoint(np.array([0.0]), np.zeros(1, int), 0.5, 1),
           ExtremePoint(np.array([1e-8]), np.zeros(1, int), 0.4999, 1),
           ExtremePoint(np.array([1e-8]), np.zeros(1, int), -0.5, -1)]
    out = dedup(pts, 1e-6, D1)
    assert len(out) == 2
    assert {p.sign for p in out} == {1, -1}


def test_signature_of_signs():
    b = build_basis(1, 1)
    sig = signature_of(monomial_power_target(2), b, [0.5, 0.0], [[-1.0], [0.0], [1.0]])
    np.testing.assert_array_equal(sig.signs, [-1, 1, -1])
    assert sig.norm_value == pytest.approx(0.5)
    assert len(sig.to_list()) == 3


def test_set_valued_signature_of_example():
    b = build_basis(1, 1)
    sig = set_valued_signature(interval_family_target(), b, [23 / 32, 0.5], [[-1.0], [-0.25], [1.0]])
    assert sig.norm_value == pytest.approx(25 / 32)
    assert sorted(sig.families.tolist()) == [0, 1, 1]


def test_extended_signature_doubles_zero_components():
    b = build_basis(1, 1)
    t = HornerTarget(airy_target(), 2.0**-20)
    # a_1 = 0 makes the last Horner suffix vanish everywhere
    vs = extended_signature(t, b, [0.3, 0.0], [[0.5]])
    assert len(vs) == 2
    assert set(vs.signs[:, 2].tolist()) == {-1, 1}


def test_signature_requires_matching_lengths():
    with pytest.raises(ValueError):
        Signature(np.zeros((2, 1)), [1], 1.0)
