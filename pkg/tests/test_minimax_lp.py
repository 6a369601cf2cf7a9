import numpy as np
import pytest
from scipy.optimize import linprog

from chebcert.basis import BoxDomain, build_basis, eval_basis
from chebcert.errors import NotApplicable
from chebcert.minimax_lp import active_indices, assemble_lp, discrete_minimax, regular_grid, solve_lp
from chebcert.target import interval_family_target, monomial_power_target, polynomial_target, runge_target


def test_regular_grid_shape_and_order():
    g = regular_grid(BoxDomain.unit(2), (3, 2))
    assert g.points.shape == (6, 2)
    np.testing.assert_array_equal(g.points[:2], [[0.0, 0.0], [0.0, 1.0]])


def test_t2_discrete_solution():
    sol = discrete_minimax(monomial_power_target(2), build_basis(1, 1), regular_grid(BoxDomain.interval(-1, 1), 21))
    assert sol.t == pytest.approx(0.5)
    np.testing.assert_allclose(sol.a, [0.5, 0.0], atol=1e-12)
    act = active_indices(sol)
    assert sorted(float(ai.x[0]) for ai in act) == [-1.0, 0.0, 1.0]
    assert [ai.side for ai in sorted(act, key=lambda ai: ai.x[0])] == [-1, 1, -1]


def _highs_minimax(phi, f):
    N, n = phi.shape
    c = np.r_[np.zeros(n), 1.0]
    A = np.vstack([np.c_[phi, -np.ones(N)], np.c_[-phi, -np.ones(N)]])
    return linprog(c, A_ub=A, b_ub=np.r_[f, -f], bounds=[(None, None)] * n + [(0, None)], method="highs").fun


@pytest.mark.parametrize("m,deg,c", [(2, 1, 12), (2, 3, 15), (3, 2, 6)])
def test_optimal_value_matches_highs(m, deg, c):
    b = build_basis(m, deg)
    g = regular_grid(BoxDomain.unit(m), c)
    sol = discrete_minimax(runge_target(m), b, g)
    ref = _highs_minimax(eval_basis(b, g.points), runge_target(m).values(g.points))
    assert sol.t == pytest.approx(ref, abs=1e-10)
    assert np.max(np.abs(sol.errors())) == pytest.approx(sol.t, abs=1e-9)


def test_exact_fit_has_no_active_set():
    b = build_basis(2, 2)
    t = polynomial_target(b, np.arange(6.0))
    sol = discrete_minimax(t, b, regular_grid(BoxDomain.unit(2), 5))
    assert sol.t == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(NotApplicable):
        active_indices(sol)


def test_set_valued_lp_has_four_rows_per_point():
    b = build_basis(1, 1)
    g = regular_grid(BoxDomain.interval(-1, 1), 9)
    t = interval_family_target()
    lp = assemble_lp(b, g, tuple(f.values(g.points) for f in t.families))
    assert len(lp.rows) == 4 * len(g)
    assert solve_lp(lp).t == pytest.approx(25 / 32, abs=1e-12)


def test_solution_serializes(tmp_path):
    sol = discrete_minimax(monomial_power_target(2), build_basis(1, 1), regular_grid(BoxDomain.interval(-1, 1), 5))
    sol.dump(tmp_path / "lp.json")
    d = sol.to_dict()
    assert d["status"] == "optimal" and len(d["active"]) == 3
