import math

import numpy as np
import pytest

from chebcert.basis import (
    BoxDomain,
    MonomialBasis,
    build_basis,
    eval_basis,
    eval_poly,
    grad_basis,
    hess_basis,
)


@pytest.mark.parametrize("m,d", [(1, 0), (1, 6), (2, 3), (3, 2), (10, 1)])
def test_size_is_binomial(m, d):
    assert build_basis(m, d).n == math.comb(m + d, d)


def test_grlex_order_bivariate():
    assert build_basis(2, 2).indices == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_univariate_is_vandermonde():
    x = np.array([[-1.0], [0.5], [2.0]])
    np.testing.assert_allclose(eval_basis(build_basis(1, 3), x), np.vander(x[:, 0], 4, increasing=True))


def test_gradient_and_hessian_match_differences():
    b = build_basis(3, 3)
    x = np.array([0.3, -0.7, 0.2])
    h = 1e-6
    G = grad_basis(b, x)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (eval_basis(b, x + e) - eval_basis(b, x - e)) / (2 * h)
        np.testing.assert_allclose(G[:, j], fd, atol=1e-8)
    H = hess_basis(b, x)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (grad_basis(b, x + e) - grad_basis(b, x - e)) / (2 * h)
        np.testing.assert_allclose(H[:, :, j], fd, atol=1e-6)


def test_poly_eval_and_manifest_roundtrip():
    b = build_basis(2, 1)
    assert eval_poly(b, [1.0, 2.0, 3.0], np.array([1.0, 1.0])) == pytest.approx(6.0)
    assert MonomialBasis.from_manifest(b.to_manifest()) == b


def test_invalid_inputs():
    with pytest.raises(ValueError):
        build_basis(2, -1)
    with pytest.raises(ValueError):
        build_basis(0, 1)
    with pytest.raises(ValueError):
        BoxDomain(np.array([1.0]), np.array([0.0]))


def test_domain_helpers():
    d = BoxDomain.unit(2)
    assert d.m == 2 and d.contains([0.5, 1.0]) and not d.contains([1.5, 0.0])
    np.testing.assert_array_equal(d.clip([2.0, -1.0]), [1.0, 0.0])
