"""Property-based checks on random instances."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from chebcert.basis import BoxDomain, build_basis, eval_basis
from chebcert.certify import certify, sharpness_estimate, subgradient_matrix
from chebcert.extrema import Signature
from chebcert.minimax_lp import discrete_minimax, regular_grid
from chebcert.oracle import global_error
from chebcert.pipeline import SolveConfig, approximate
from chebcert.target import polynomial_target

coeffs = st.lists(st.floats(-2, 2, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(coeffs)
def test_discrete_error_is_a_lower_bound(c):
    t = polynomial_target(build_basis(1, 3), c)
    b, dom = build_basis(1, 1), BoxDomain.interval(-1, 1)
    sol = discrete_minimax(t, b, regular_grid(dom, 17))
    assert sol.t <= global_error(t, b, sol.a, dom, per_dim=401).value + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3))
def test_lp_is_invariant_under_adding_a_basis_polynomial(shift):
    # replacing f by f + q with q in the span leaves the error unchanged
    b, dom = build_basis(1, 2), BoxDomain.interval(-1, 1)
    g = regular_grid(dom, 15)
    f = polynomial_target(build_basis(1, 4), [0.1, -0.3, 0.2, 0.7, -0.5])
    c = np.r_[0.1, -0.3, 0.2, 0.7, -0.5]
    c[:3] += shift
    t1 = discrete_minimax(f, b, g).t
    t2 = discrete_minimax(polynomial_target(build_basis(1, 4), c), b, g).t
    assert abs(t1 - t2) <= 1e-9 * max(1.0, abs(t1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3))
def test_kernel_certificate_residual(seed, m):
    # random signatures: whenever a certificate is issued, S lambda vanishes
    rng = np.random.default_rng(seed)
    b = build_basis(m, 1)
    k = int(rng.integers(2, b.n + 2))
    sig = Signature(rng.uniform(-1, 1, (k, m)), rng.choice([-1, 1], k), 1.0)
    S = subgradient_matrix(sig, b)
    cert = certify(S)
    if cert.lam is not None and cert.is_optimal:
        assert np.linalg.norm(S.S @ cert.lam) <= 1e-10 * max(1.0, np.linalg.norm(S.S, 2))
        assert np.all(cert.lam >= -1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_sharpness_scales_with_columns(c):
    S = np.array([[-1.0, 1.0, -1.0], [1.0, 0.0, -1.0]])
    r1 = sharpness_estimate(S, 4000, seed=1)
    assert abs(sharpness_estimate(c * S, 4000, seed=1) - c * r1) <= 1e-9 * c


@settings(max_examples=10, deadline=None)
@given(coeffs)
def test_newton_error_equals_oracle(c):
    t = polynomial_target(build_basis(1, 3), c)
    b, dom = build_basis(1, 2), BoxDomain.interval(-1, 1)
    r = approximate(t, b, dom, SolveConfig(grid=(41,)))
    if r.failure is None and r.lp.t > 1e-6:
        assert abs(r.newton_error - r.global_value) <= 1e-6 * max(1.0, r.global_value)
        P = eval_basis(b, r.newton.final.X) @ r.a - t.values(r.newton.final.X)
        assert np.ptp(np.abs(P)) <= 1e-10
