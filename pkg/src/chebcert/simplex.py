"""Dense revised simplex for ``max c^T y  s.t.  A y = b, y >= 0``.

Two phases with artificial variables. Pricing is Dantzig's largest reduced
cost; after a run of degenerate pivots the solver falls back to Bland's rule
(smallest index entering and leaving), which cannot cycle. The basis matrix is
refactorized at every iteration: bases here have at most a few dozen rows, so
this costs little and keeps multipliers accurate on badly scaled problems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NumericalFailure


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    objective: float
    multipliers: np.ndarray  # pi with A^T pi >= c at optimality
    basis: np.ndarray
    iterations: int
    condition: float


def _factor(B):
    with np.errstate(all="ignore"):
        lu = lu_factor(B, check_finite=False)
    if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) == 0.0:
        raise NumericalFailure("singular simplex basis", condition=np.inf)
    return lu


class _Tableau:
    def __init__(self, A, b, c, basis, allowed, tol, pivot_tol, bland_after, max_iter):
        self.A, self.b, self.c = A, b, c
        self.basis = np.array(basis, dtype=np.int64)
        self.allowed = allowed
        self.tol = tol
        self.pivot_tol = pivot_tol
        self.bland_after = bland_after
        self.max_iter = max_iter
        self.iterations = 0

    def state(self):
        B = self.A[:, self.basis]
        lu = _factor(B)
        xB = lu_solve(lu, self.b, check_finite=False)
        pi = lu_solve(lu, self.c[self.basis], trans=1, check_finite=False)
        return lu, xB, pi

    def run(self) -> str:
        A, c = self.A, self.c
        degenerate_run = 0
        ctol = self.tol * (1.0 + np.max(np.abs(c)))
        while True:
            if self.iterations >= self.max_iter:
                raise NumericalFailure(f"simplex iteration limit {self.max_iter} reached")
            lu, xB, pi = self.state()
            d = c - A.T @ pi
            d[~self.allowed] = -np.inf
            d[self.basis] = -np.inf
            bland = degenerate_run >= self.bland_after
            candidates = np.nonzero(d > ctol)[0]
            if candidates.size == 0:
                return "optimal"
            q = int(candidates[0]) if bland else int(candidates[np.argmax(d[candidates])])
            w = lu_solve(lu, A[:, q], check_finite=False)
            rows = np.nonzero(w > self.pivot_tol)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = np.maximum(xB[rows], 0.0) / w[rows]
            best = np.min(ratios)
            ties = rows[ratios <= best + 1e-12 * (1.0 + best)]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(w[ties])])
            degenerate_run = degenerate_run + 1 if best <= 1e-13 else 0
            self.basis[r] = q
            self.iterations += 1


def simplex_max(c, A, b, *, tol=1e-11, pivot_tol=1e-11, bland_after=40, max_iter=None) -> SimplexResult:
    """Solve ``max c^T y, A y = b, y >= 0`` with a two-phase revised simplex."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    c = np.array(c, dtype=float).reshape(-1)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000

    # phase 1: maximize -sum(artificials)
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), -np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    tab = _Tableau(A1, b, c1, np.arange(n, n + m), allowed, tol, pivot_tol, bland_after, max_iter)
    status = tab.run()
    _, xB, _ = tab.state()
    scale = 1.0 + np.max(np.abs(b))
    infeas = float(np.sum(xB[tab.basis >= n]))
    if status != "optimal" or infeas > 1e-9 * scale:
        x = np.zeros(n)
        return SimplexResult("infeasible", x, np.nan, np.zeros(m), tab.basis, tab.iterations, np.nan)

    # drive zero-level artificials out of the basis; drop rows that are redundant
    keep_rows = np.ones(m, dtype=bool)
    for r in range(m):
        if tab.basis[r] < n:
            continue
        lu = _factor(A1[:, tab.basis])
        row = lu_solve(lu, np.eye(m)[:, r], trans=1, check_finite=False) @ A
        row[tab.basis[tab.basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9 * (1.0 + np.max(np.abs(A[:, j]))):
            tab.basis[r] = j
        else:
            keep_rows[r] = False
    rows = np.nonzero(keep_rows)[0]
    basis = tab.basis[keep_rows]
    A2, b2 = A[rows], b[rows]

    # phase 2
    allowed2 = np.ones(n, dtype=bool)
    tab2 = _Tableau(A2, b2, c, basis, allowed2, tol, pivot_tol, bland_after, max_iter)
    tab2.iterations = tab.iterations
    status = tab2.run()
    lu, xB, pi_red = tab2.state()
    x = np.zeros(n)
    x[tab2.basis] = np.maximum(xB, 0.0)
    pi = np.zeros(m)
    pi[rows] = pi_red
    pi[neg] *= -1
    cond = float(np.linalg.cond(A2[:, tab2.basis]))
    if status == "unbounded":
        return SimplexResult("unbounded", x, np.inf, pi, tab2.basis, tab2.iterations, cond)
    return SimplexResult("optimal", x, float(c @ x), pi, tab2.basis, tab2.iterations, cond)
