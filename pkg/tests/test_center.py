import numpy as np
import pytest

from chebcert.basis import BoxDomain, build_basis
from chebcert.center import CenterProblem, duplicate_point_shortcut, levis_strong_check, solve_center
from chebcert.certify import OPTIMAL, STRONGLY_UNIQUE, certify, subgradient_matrix
from chebcert.extrema import Signature
from chebcert.pipeline import SolveConfig, approximate
from chebcert.target import SetValuedTarget, interval_family_target, runge_target, two_lines_target

D1 = BoxDomain.interval(-1, 1)


def test_interval_family_center():
    r = solve_center(CenterProblem(interval_family_target(), build_basis(1, 1), D1))
    np.testing.assert_allclose(r.a, [23 / 32, 0.5], atol=1e-10)
    assert r.error == pytest.approx(25 / 32, abs=1e-12)
    assert r.certificate.status == STRONGLY_UNIQUE
    assert r.branch == "both"
    assert r.to_dict()["center"]["families"] is not None


def test_two_lines_center_shortcut():
    r = solve_center(CenterProblem(two_lines_target(), build_basis(1, 0), D1))
    assert r.a[0] == pytest.approx(1.0, abs=1e-10) and r.error == pytest.approx(2.0)
    cut = duplicate_point_shortcut(r.signature)
    assert cut.status == OPTIMAL
    np.testing.assert_allclose(sorted(cut.lam[cut.lam > 0]), [0.5, 0.5])
    # the shortcut agrees with the full certificate
    assert certify(subgradient_matrix(r.signature, build_basis(1, 0))).is_optimal


def test_levis_check():
    sub = Signature(np.array([[-1.0], [0.25], [1.0]]), [-1, 1, -1], 25 / 32)
    assert levis_strong_check(sub, build_basis(1, 1))
    dup = Signature(np.array([[1.0], [1.0]]), [1, -1], 2.0)
    assert not levis_strong_check(dup, build_basis(1, 1))
    assert duplicate_point_shortcut(sub) is None


def test_degenerate_family_equals_plain_pipeline():
    t = runge_target(2)
    cfg = SolveConfig(grid=(12,))
    r = solve_center(CenterProblem(SetValuedTarget.from_single(t), build_basis(2, 1), BoxDomain.unit(2)), cfg)
    plain = approximate(t, build_basis(2, 1), BoxDomain.unit(2), cfg)
    np.testing.assert_array_equal(r.a, plain.a)
