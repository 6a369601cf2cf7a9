import numpy as np
import pytest

from chebcert.basis import BoxDomain, build_basis
from chebcert.errors import MaxIterations, SignFlip
from chebcert.newton import NewtonSystem, NewtonVariables, audit_solution, init_kernel, newton_solve
from chebcert.pipeline import SolveConfig, approximate
from chebcert.target import monomial_power_target, runge_target

D1 = BoxDomain.interval(-1, 1)


def _t2_start(a=(0.45, 0.02), X=(-1.0, 0.05, 1.0)):
    return NewtonVariables(np.array(a), np.array(X), np.array([0.3, 0.4, 0.3]), np.array([-1, 0, 1]),
                           np.array([-1, 1, -1]))


def test_t2_converges_quadratically():
    sys_ = NewtonSystem(monomial_power_target(2), build_basis(1, 1), D1, _t2_start())
    rep = newton_solve(sys_)
    assert rep.converged and rep.iterations <= 6
    np.testing.assert_allclose(rep.final.a, [0.5, 0.0], atol=1e-13)
    np.testing.assert_allclose(rep.final.lam, [0.25, 0.5, 0.25], atol=1e-13)
    assert abs(rep.error) == pytest.approx(0.5)
    assert audit_solution(sys_, rep.final).ok()
    assert len(rep.trace_lines()) == rep.iterations + 2


def test_pack_unpack_roundtrip():
    sys_ = NewtonSystem(monomial_power_target(2), build_basis(1, 1), D1, _t2_start())
    z = sys_.pack(sys_.init)
    v = sys_.unpack(z)
    np.testing.assert_array_equal(sys_.pack(v), z)


def test_jacobian_matches_differences():
    sys_ = NewtonSystem(runge_target(2), build_basis(2, 1), BoxDomain.unit(2),
                        approximate(runge_target(2), build_basis(2, 1), BoxDomain.unit(2),
                                    SolveConfig(oracle=False)).init)
    z = sys_.pack(sys_.init)
    F, J, _ = sys_.evaluate(z)
    h = 1e-7
    for j in range(z.size):
        e = np.zeros(z.size)
        e[j] = h
        fd = (sys_.evaluate(z + e, jacobian=False)[0] - sys_.evaluate(z - e, jacobian=False)[0]) / (2 * h)
        np.testing.assert_allclose(J[:, j], fd, atol=1e-5)


def test_max_iterations_carries_report():
    sys_ = NewtonSystem(monomial_power_target(2), build_basis(1, 1), D1, _t2_start())
    with pytest.raises(MaxIterations) as info:
        newton_solve(sys_, max_iter=1, tol=1e-30)
    assert info.value.report.iterations == 1


def test_sign_flip_detected():
    sys_ = NewtonSystem(monomial_power_target(2), build_basis(1, 1), D1, _t2_start())
    sys_.check_signs(sys_.pack(sys_.init))
    # lowering a_0 below zero makes the error at the interior point negative
    bad = _t2_start(a=(-0.2, 0.0), X=(-1.0, 0.0, 1.0))
    with pytest.raises(SignFlip) as info:
        sys_.check_signs(sys_.pack(bad))
    assert info.value.extreme_index == 1


def test_init_kernel_drops_smallest_singular_value():
    lam = init_kernel(np.array([[-1.0, 1.0, -1.0], [1.0, 0.0, -1.0 + 1e-3]]))
    assert np.all(lam > 0) and lam.sum() == pytest.approx(1.0)
