"""Discretized minimax problem on a regular grid.

The primal LP is ``min t`` subject to ``+-(phi(x_i)^T a - f(x_i)) <= t``. We
solve its dual

    max  sum_i f_i (y-_i - y+_i)
    s.t. sum_i (y+_i + y-_i) = 1,   sum_i phi(x_i) (y+_i - y-_i) = 0,   y >= 0

with the dense simplex. The optimal multipliers pi = (pi_0, pi_a) recover the
primal solution as ``t = pi_0`` and ``a = -pi_a``; the basic dual variables are
the active constraints and their side gives the error sign.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import BoxDomain, MonomialBasis, eval_basis
from .errors import NotApplicable, NumericalFailure
from .simplex import simplex_max


@dataclass(frozen=True)
class SampleGrid:
    domain: BoxDomain
    counts: tuple[int, ...]
    points: np.ndarray = field(repr=False)

    def __len__(self):
        return self.points.shape[0]


def regular_grid(domain: BoxDomain, counts) -> SampleGrid:
    """Equispaced grid including both endpoints; last coordinate varies fastest."""
    counts = np.broadcast_to(np.atleast_1d(np.asarray(counts, dtype=int)), (domain.m,))
    if np.any(counts < 2):
        raise ValueError("each grid count must be >= 2")
    axes = [np.linspace(lo, hi, int(c)) for lo, hi, c in zip(domain.lower, domain.upper, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    return SampleGrid(domain, tuple(int(c) for c in counts), pts)


@dataclass
class MinimaxLP:
    """Constraint data. Row r of ``rows`` is (grid index, family, side)."""

    basis: MonomialBasis
    points: np.ndarray
    phi: np.ndarray
    fvals: tuple[np.ndarray, ...]  # one value array per target family
    rows: np.ndarray

    @property
    def num_variables(self) -> int:
        return self.basis.n + 1

    @property
    def num_constraints(self) -> int:
        return self.rows.shape[0]


def assemble_lp(basis: MonomialBasis, grid, fvals) -> MinimaxLP:
    """``fvals`` is one array of target values, or a pair (f_minus, f_plus)."""
    points = grid.points if isinstance(grid, SampleGrid) else np.atleast_2d(np.asarray(grid, dtype=float))
    N = points.shape[0]
    if isinstance(fvals, (tuple, list)) and len(fvals) and np.ndim(fvals[0]) == 1:
        families = tuple(np.asarray(v, dtype=float) for v in fvals)
    else:
        families = (np.asarray(fvals, dtype=float).reshape(-1),)
    for v in families:
        if v.shape != (N,):
            raise ValueError(f"expected {N} target values per family, got {v.shape}")
    if len(families) == 2 and np.any(families[0] > families[1] + 1e-12 * (1 + np.abs(families[1]))):
        raise ValueError("f_minus must not exceed f_plus on the grid")
    rows = []
    for fam in range(len(families)):
        for side in (1, -1):
            rows.append(np.column_stack([np.arange(N), np.full(N, fam), np.full(N, side)]))
    return MinimaxLP(basis, points, eval_basis(basis, points), families, np.vstack(rows))


@dataclass
class ActiveIndex:
    index: int  # grid point index
    x: np.ndarray
    side: int  # sign of p - f at the constraint
    family: int
    dual: float


@dataclass
class LpSolution:
    t: float
    a: np.ndarray
    duals: np.ndarray
    status: str
    condition: float
    iterations: int
    lp: MinimaxLP = field(repr=False)

    def errors(self) -> np.ndarray:
        """Signed errors p - f for every family, shape (families, N)."""
        p = self.lp.phi @ self.a
        return np.array([p - f for f in self.lp.fvals])

    def to_dict(self, dual_tol: float = 1e-8) -> dict:
        try:
            act = active_indices(self, dual_tol)
        except NotApplicable:
            act = []
        return {
            "t": self.t,
            "a": self.a.tolist(),
            "status": self.status,
            "condition": self.condition,
            "active": [
                {"x": ai.x.tolist(), "side": ai.side, "family": ai.family, "dual": ai.dual}
                for ai in act
            ],
        }

    def dump(self, path, dual_tol: float = 1e-8):
        with open(path, "w") as fh:
            json.dump(self.to_dict(dual_tol), fh, indent=2)


def solve_lp(lp: MinimaxLP) -> LpSolution:
    # scale each monomial column to unit max so wide boxes stay well conditioned
    colscale = np.maximum(np.max(np.abs(lp.phi), axis=0), 1e-300)
    phi = lp.phi / colscale
    N, n = phi.shape
    cols, costs = [], []
    for r0 in range(0, lp.num_constraints, N):
        fam, side = int(lp.rows[r0, 1]), int(lp.rows[r0, 2])
        cols.append(np.vstack([np.ones((1, N)), side * phi.T]))
        costs.append(-side * lp.fvals[fam])
    A = np.hstack(cols)
    b = np.zeros(n + 1)
    b[0] = 1.0
    res = simplex_max(np.concatenate(costs), A, b)
    if res.status != "optimal":
        raise NumericalFailure(f"minimax LP ended with status {res.status}", condition=res.condition)
    t = float(res.multipliers[0])
    a = -res.multipliers[1:] / colscale
    sol = LpSolution(t, a, res.x, "optimal", res.condition, res.iterations, lp)
    # primal feasibility check; the dual objective must match max |error|
    worst = float(np.max(np.abs(sol.errors()))) if len(lp.fvals) == 1 else _set_valued_norm(sol)
    scale = 1.0 + max(np.max(np.abs(f)) for f in lp.fvals)
    if abs(worst - t) > 1e-7 * scale:
        raise NumericalFailure(
            f"LP solution inconsistent: t={t:.3e} but max error {worst:.3e}", condition=res.condition
        )
    sol.t = worst if len(lp.fvals) > 1 else max(t, worst)
    return sol


def _set_valued_norm(sol: LpSolution) -> float:
    e = sol.errors()
    return float(max(np.max(e[0]), np.max(-e[1]), np.max(np.abs(e))))


def active_indices(sol: LpSolution, dual_tol: float = 1e-8) -> list[ActiveIndex]:
    """Constraints whose dual weight exceeds ``dual_tol`` times the largest dual."""
    scale = 1.0 + max(np.max(np.abs(f)) for f in sol.lp.fvals)
    if sol.t <= 1e-13 * scale:
        raise NotApplicable("discrete error is zero: every constraint is active")
    dmax = float(np.max(sol.duals))
    out = []
    for r in np.nonzero(sol.duals > dual_tol * dmax)[0]:
        i, fam, side = (int(v) for v in sol.lp.rows[r])
        out.append(ActiveIndex(i, sol.lp.points[i].copy(), side, fam, float(sol.duals[r])))
    out.sort(key=lambda ai: (ai.index, ai.family, ai.side))
    return out


def discrete_minimax(target, basis: MonomialBasis, grid: SampleGrid | Sequence) -> LpSolution:
    """Evaluate the target families on the grid and solve the LP."""
    points = grid.points if isinstance(grid, SampleGrid) else np.asarray(grid, dtype=float)
    fams = [np.asarray(f.values(points), dtype=float) for f in target.families]
    return solve_lp(assemble_lp(basis, points, tuple(fams) if len(fams) > 1 else fams[0]))
