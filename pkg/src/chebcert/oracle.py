"""Brute-force checks: dense-grid sup norm, difference quotients, perturbation audits.

The sup norm is estimated on a fine grid whose best points are then polished
by local maximization. This is not a rigorous bound.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basis import BoxDomain, MonomialBasis, eval_basis
from .certify import OPTIMAL, STRONGLY_UNIQUE, AuditResult, KernelCertificate
from .errors import ChebcertError
from .extrema import polish_extreme
from .minimax_lp import regular_grid
from .target import HornerTarget, SetValuedTarget, horner_error_terms_batch


def default_per_dim(m: int, budget: int = 200_000) -> int:
    if m == 1:
        return 2001
    if m == 2:
        return 201
    return max(3, int(np.floor(budget ** (1.0 / m))))


def error_values(target, basis: MonomialBasis, a, X) -> np.ndarray:
    """Pointwise error magnitude used for the sup norm."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.asarray(a, dtype=float)
    if isinstance(target, HornerTarget):
        e = horner_error_terms_batch(target, basis, a, X)
        return np.abs(e[:, 0]) + target.u * np.sum(np.abs(e[:, 1:]), axis=1)
    p = eval_basis(basis, X) @ a
    if isinstance(target, SetValuedTarget):
        return np.maximum(p - target.f_minus.values(X), target.f_plus.values(X) - p)
    return np.abs(p - target.families[0].values(X))


def _candidates(target, basis, a, x):
    # (family, sign) pairs whose error can attain the maximum at x
    x2 = np.atleast_2d(x)
    p = float(eval_basis(basis, x2)[0] @ a)
    if isinstance(target, HornerTarget):
        return [(0, 1)]
    if isinstance(target, SetValuedTarget):
        lo = p - target.f_minus.value(x)
        hi = target.f_plus.value(x) - p
        return [(0, 1)] if lo >= hi else [(1, -1)]
    e = p - target.families[0].value(x)
    return [(0, 1 if e >= 0 else -1)]


@dataclass
class GlobalError:
    value: float
    argmax: list = field(default_factory=list)  # points attaining the value
    grid_points: int = 0
    grid_value: float = 0.0

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax": [np.asarray(x).tolist() for x in self.argmax],
            "grid_points": self.grid_points,
            "grid_value": self.grid_value,
        }


def global_error(target, basis: MonomialBasis, a, domain: BoxDomain, *, per_dim: Optional[int] = None,
                 polish_top: int = 50, extra_points: Sequence = ()) -> GlobalError:
    """Dense grid plus polishing of the largest grid values (and any extra seeds)."""
    a = np.asarray(a, dtype=float)
    per_dim = default_per_dim(domain.m) if per_dim is None else per_dim
    grid = regular_grid(domain, per_dim)
    vals = error_values(target, basis, a, grid.points)
    order = np.lexsort((*grid.points.T[::-1], -vals))  # value descending, ties by x
    grid_best = float(vals[order[0]])
    seeds = [grid.points[i] for i in order[:polish_top]] + [np.atleast_1d(x) for x in extra_points]
    found = [(grid_best, grid.points[order[0]])]
    for x0 in seeds:
        for fam, s in _candidates(target, basis, a, x0):
            try:
                ep = polish_extreme(target, basis, a, x0, domain, family=fam, sign=s)
            except ChebcertError:
                continue
            found.append((abs(ep.error), ep.x))
    best = max(v for v, _ in found)
    tol = 1e-9 * max(1.0, best)
    arg = []
    for v, x in sorted(found, key=lambda t: (-t[0], tuple(t[1]))):
        if v >= best - tol and not any(np.max(np.abs(x - y)) <= 1e-6 for y in arg):
            arg.append(x)
    return GlobalError(best, arg, len(grid), grid_best)


def sup_error(target, basis, a, domain, **kw) -> float:
    return global_error(target, basis, a, domain, **kw).value


def fd_directional(target, basis: MonomialBasis, a, u, ts: Sequence[float], domain: BoxDomain,
                   **kw) -> np.ndarray:
    """One-sided quotients (m(a + t u) - m(a)) / t for each t."""
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return np.zeros(len(ts))
    m0 = sup_error(target, basis, a, domain, **kw)
    return np.array([(sup_error(target, basis, a + t * u, domain, **kw) - m0) / t for t in ts])


def perturbation_audit(target, basis: MonomialBasis, a, certificate: KernelCertificate, domain: BoxDomain,
                       *, trials: int = 1000, radius: float = 0.1, kappa: float = 2.0, seed: int = 0,
                       per_dim: Optional[int] = None) -> AuditResult:
    """Sample a' in a ball around a and check the optimality growth bound."""
    if radius == 0 or trials <= 0:
        return AuditResult("pass", 0)
    a = np.asarray(a, dtype=float)
    # the exact sup norm on a fixed fine point set keeps the comparison consistent
    per_dim = per_dim if per_dim is not None else min(default_per_dim(domain.m), 401 if domain.m == 1 else 61)
    pts = regular_grid(domain, per_dim).points
    ge = global_error(target, basis, a, domain, per_dim=per_dim)
    pts = np.vstack([pts] + [np.atleast_2d(x) for x in ge.argmax])
    m0 = float(np.max(error_values(target, basis, a, pts)))
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((trials, a.size))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    D *= radius * rng.random((trials, 1)) ** (1.0 / a.size)
    strong = certificate.status == STRONGLY_UNIQUE and certificate.r_hat is not None
    if certificate.status not in (OPTIMAL, STRONGLY_UNIQUE):
        return AuditResult("inconclusive", trials)
    worst = np.inf
    for d in D:
        mp = float(np.max(error_values(target, basis, a + d, pts)))
        bound = m0 - 1e-8
        if strong:
            bound = m0 + certificate.r_hat / kappa * float(np.linalg.norm(d)) - 1e-8
        margin = mp - bound
        if margin < worst:
            worst = margin
        if margin < 0:
            return AuditResult("fail", trials, margin, a + d)
    return AuditResult("pass", trials, float(worst))


def alternation_count(signature) -> int:
    """Longest alternating-sign chain of a univariate signature sorted by x."""
    pts = np.asarray(signature.points, dtype=float)
    if pts.shape[1] != 1:
        raise ValueError("alternation is defined for univariate signatures")
    s = np.asarray(signature.signs)[np.argsort(pts[:, 0], kind="stable")]
    if s.size == 0:
        return 0
    count, last = 1, s[0]
    for v in s[1:]:
        if v != last:
            count += 1
            last = v
    return count


def write_error_grid(path, target, basis: MonomialBasis, a, domain: BoxDomain, per_dim: Optional[int] = None):
    """CSV with header x1,...,xm,error (signed p - f for plain targets)."""
    per_dim = per_dim if per_dim is not None else min(default_per_dim(domain.m), 101)
    pts = regular_grid(domain, per_dim).points
    if isinstance(target, (HornerTarget, SetValuedTarget)):
        err = error_values(target, basis, a, pts)
    else:
        err = eval_basis(basis, pts) @ np.asarray(a, dtype=float) - target.families[0].values(pts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(domain.m)] + ["error"])
        for x, e in zip(pts, err):
            w.writerow([repr(float(v)) for v in x] + [repr(float(e))])


def grid_local_maxima(values, counts) -> np.ndarray:
    """Flat indices of grid points not exceeded by any axis neighbour."""
    V = np.asarray(values, dtype=float).reshape(tuple(counts))
    keep = np.ones(V.shape, dtype=bool)
    for ax in range(V.ndim):
        P = np.pad(V, [(1, 1) if j == ax else (0, 0) for j in range(V.ndim)], constant_values=-np.inf)
        lo = np.take(P, range(0, V.shape[ax]), axis=ax)
        hi = np.take(P, range(2, V.shape[ax] + 2), axis=ax)
        keep &= (V >= lo) & (V >= hi)
    return np.flatnonzero(keep.ravel())


def find_extremes(target, basis: MonomialBasis, a, domain: BoxDomain, *, per_dim: Optional[int] = None,
                  rel_tol: float = 1e-7, max_seeds: int = 500) -> list:
    """Polished local maximizers whose error is within ``rel_tol`` of the largest one."""
    from .extrema import dedup

    a = np.asarray(a, dtype=float)
    per_dim = per_dim if per_dim is not None else min(default_per_dim(domain.m), 101 if domain.m == 2 else 2001)
    grid = regular_grid(domain, per_dim)
    vals = error_values(target, basis, a, grid.points)
    idx = grid_local_maxima(vals, grid.counts)
    idx = idx[np.argsort(-vals[idx], kind="stable")][:max_seeds]
    pts = []
    for i in idx:
        x0 = grid.points[i]
        for fam, s in _candidates(target, basis, a, x0):
            try:
                pts.append(polish_extreme(target, basis, a, x0, domain, family=fam, sign=s))
            except ChebcertError:
                continue
    if not pts:
        return []
    best = max(abs(p.error) for p in pts)
    near = [p for p in pts if abs(p.error) >= best - rel_tol * max(1.0, best)]
    return dedup(near, 1e-6, domain)
