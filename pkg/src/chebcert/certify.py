"""Subgradient matrices, kernel certificates and directional checks.

A polynomial is optimal for its signature when zero lies in the convex hull
of the columns of ``S``, i.e. when ``S`` has a nonzero kernel vector with
non-negative entries. A positive kernel vector together with rank ``n`` makes
the optimum strongly unique.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .basis import MonomialBasis, eval_basis
from .errors import KernelDimensionTooHigh
from .extrema import Signature, VectorSignature
from .simplex import simplex_max
from .target import HornerTarget, horner_masks

STRONGLY_UNIQUE = "StronglyUnique"
OPTIMAL = "Optimal"
NOT_CERTIFIED = "NotCertified"
INCONCLUSIVE = "Inconclusive"

RANK_TOL = 1e-10
RESIDUAL_TOL = 1e-10
LAMBDA_TOL = 1e-10
ZERO_TOL = 1e-8


@dataclass
class SubgradientMatrix:
    S: np.ndarray  # (n, k)
    points: np.ndarray
    signs: np.ndarray

    @property
    def n(self) -> int:
        return self.S.shape[0]

    @property
    def k(self) -> int:
        return self.S.shape[1]


def horner_columns(target: HornerTarget, basis: MonomialBasis, points, signs) -> np.ndarray:
    """psi(x, s) = s_0 phi(x) + u sum_j s_j E_j phi(x), one column per row of ``signs``."""
    Phi = eval_basis(basis, np.atleast_2d(points))
    E = horner_masks(basis.n)
    signs = np.atleast_2d(signs)
    W = signs[:, :1] + target.u * (signs[:, 1:] @ E)
    return (W * Phi).T


def subgradient_matrix(sig, basis: MonomialBasis, target=None) -> SubgradientMatrix:
    if len(sig) == 0:
        raise ValueError("signature is empty")
    if isinstance(sig, VectorSignature):
        if not isinstance(target, HornerTarget):
            raise ValueError("vector signatures need the Horner target")
        return SubgradientMatrix(horner_columns(target, basis, sig.points, sig.signs), sig.points, sig.signs)
    Phi = eval_basis(basis, sig.points)
    return SubgradientMatrix((sig.signs[:, None] * Phi).T, sig.points, sig.signs)


@dataclass
class KernelResult:
    lam: Optional[np.ndarray]
    rank: int
    singular_values: np.ndarray
    dimension: int  # numerical kernel dimension before any drop
    no_kernel: bool = False
    dropped: bool = False


def _as_array(S) -> np.ndarray:
    return S.S if isinstance(S, SubgradientMatrix) else np.atleast_2d(np.asarray(S, dtype=float))


def _orient(v: np.ndarray) -> np.ndarray:
    # nonnegative orientation when one exists, otherwise positive sum
    if np.all(v >= -LAMBDA_TOL * np.max(np.abs(v))) or np.all(v <= LAMBDA_TOL * np.max(np.abs(v))):
        v = v if np.sum(v) > 0 else -v
    elif np.sum(v) < 0:
        v = -v
    s = np.sum(v)
    return v / s if abs(s) > 1e-14 * np.max(np.abs(v)) else v / np.max(np.abs(v))


def kernel_vector(S, drop_smallest: bool = False) -> KernelResult:
    """One-dimensional kernel of S normalized to sum 1.

    With ``drop_smallest`` a matrix without kernel has its smallest singular
    value set to zero and the matching right singular vector is returned.
    """
    A = _as_array(S)
    n, k = A.shape
    U, sv, Vt = np.linalg.svd(A)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > RANK_TOL * smax)) if smax > 0 else 0
    dim = k - rank
    if dim >= 2:
        raise KernelDimensionTooHigh(f"kernel of S has dimension {dim}", dim)
    if dim == 1:
        return KernelResult(_orient(Vt[-1].copy()), rank, sv, 1)
    if not drop_smallest:
        return KernelResult(None, rank, sv, 0, no_kernel=True)
    return KernelResult(_orient(Vt[k - 1].copy()), rank, sv, 0, no_kernel=True, dropped=True)


@dataclass
class KernelCertificate:
    status: str
    lam: Optional[np.ndarray]
    rank: int
    residual: float
    k: int
    n: int
    zero_count: int = 0
    kernel_dimension: int = 1
    r_hat: Optional[float] = None
    r_hat_samples: int = 0
    witnesses: list = field(default_factory=list)
    note: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status in (OPTIMAL, STRONGLY_UNIQUE)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "lambda": None if self.lam is None else self.lam.tolist(),
            "residual": self.residual,
            "rank": self.rank,
            "k": self.k,
            "n": self.n,
            "zero_count": self.zero_count,
            "kernel_dimension": self.kernel_dimension,
            "r_hat": self.r_hat,
            "r_hat_samples": self.r_hat_samples,
            "witnesses": [np.asarray(w).tolist() for w in self.witnesses],
            "note": self.note,
        }


def nonnegative_kernel(S) -> Optional[np.ndarray]:
    """Some lambda >= 0 with S lambda = 0 and sum 1, found by LP, or None."""
    A = _as_array(S)
    n, k = A.shape
    M = np.vstack([A, np.ones((1, k))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    res = simplex_max(np.zeros(k), M, b)
    if res.status != "optimal":
        return None
    lam = res.x
    if np.linalg.norm(A @ lam) > RESIDUAL_TOL * max(1.0, np.linalg.norm(A, 2)):
        return None
    return lam


def certify(S, *, sharpness_samples: int = 0, seed: int = 0) -> KernelCertificate:
    A = _as_array(S)
    n, k = A.shape
    normS = float(np.linalg.norm(A, 2)) if A.size else 0.0
    try:
        kr = kernel_vector(A)
    except KernelDimensionTooHigh as exc:
        # several kernel directions: look for a nonnegative combination
        lam = nonnegative_kernel(A)
        rank = k - exc.dimension
        if lam is None:
            return KernelCertificate(INCONCLUSIVE, None, rank, np.nan, k, n, kernel_dimension=exc.dimension,
                                     note="kernel dimension >= 2 and no nonnegative kernel vector")
        res = float(np.linalg.norm(A @ lam))
        return KernelCertificate(OPTIMAL, lam, rank, res, k, n, int(np.sum(lam <= ZERO_TOL)),
                                 exc.dimension, note="kernel dimension >= 2; nonnegative kernel found by LP")
    if kr.no_kernel:
        return KernelCertificate(NOT_CERTIFIED, None, kr.rank, np.nan, k, n, kernel_dimension=0,
                                 note="S has full column rank")
    lam = kr.lam
    residual = float(np.linalg.norm(A @ lam))
    zeros = int(np.sum(np.abs(lam) <= ZERO_TOL))
    ok = residual <= RESIDUAL_TOL * max(normS, 1e-300) and np.all(lam >= -LAMBDA_TOL)
    if not ok:
        status = NOT_CERTIFIED
        note = "kernel vector has a negative component" if np.any(lam < -LAMBDA_TOL) else "residual too large"
    elif kr.rank == n and np.all(lam > ZERO_TOL):
        status, note = STRONGLY_UNIQUE, ""
    else:
        status, note = OPTIMAL, ""
    cert = KernelCertificate(status, lam, kr.rank, residual, k, n, zeros, 1, note=note)
    if status == STRONGLY_UNIQUE and sharpness_samples:
        cert.r_hat = sharpness_estimate(A, sharpness_samples, seed=seed)
        cert.r_hat_samples = sharpness_samples
    return cert


def directional_derivative(sig, basis: MonomialBasis, u, target=None) -> float:
    """max over signature columns g of g^T u."""
    S = subgradient_matrix(sig, basis, target).S
    return float(np.max(S.T @ np.asarray(u, dtype=float)))


@dataclass
class AuditResult:
    status: str  # "pass" | "fail" | "inconclusive"
    trials: int
    min_value: float = np.inf
    witness: Optional[np.ndarray] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _unit_directions(rng, count, n):
    U = rng.standard_normal((count, n))
    return U / np.linalg.norm(U, axis=1, keepdims=True)


def descent_direction(S) -> Optional[np.ndarray]:
    """Minus the point of conv(columns) nearest to 0, when 0 is outside the hull."""
    A = _as_array(S)
    n, k = A.shape
    big = 1e3 * max(1.0, np.max(np.abs(A)))
    lam, _ = nnls(np.vstack([A, big * np.ones((1, k))]), np.r_[np.zeros(n), big])
    w = A @ lam
    if np.linalg.norm(w) <= 1e-9 * max(1.0, np.max(np.abs(A))):
        return None
    u = -w / np.linalg.norm(w)
    return u if np.max(A.T @ u) < 0 else None


def kolmogorov_audit(sig, basis: MonomialBasis, trials: int = 10_000, *, target=None, seed: int = 0,
                     tol: float = 1e-10) -> AuditResult:
    """Sample directions; any u with max g^T u < -tol is a descent witness."""
    if trials <= 0:
        return AuditResult("inconclusive", 0)
    S = subgradient_matrix(sig, basis, target).S
    rng = np.random.default_rng(seed)
    U = _unit_directions(rng, trials, S.shape[0])
    extra = descent_direction(S)
    if extra is not None:
        U = np.vstack([extra, U])
    vals = np.max(U @ S, axis=1)
    i = int(np.argmin(vals))
    if vals[i] < -tol:
        return AuditResult("fail", trials, float(vals[i]), U[i])
    return AuditResult("pass", trials, float(vals[i]))


def sharpness_estimate(S, samples: int = 100_000, seed: int = 0) -> float:
    """min over sampled unit u of max_i col_i^T u; zero when S is rank deficient."""
    A = _as_array(S)
    n = A.shape[0]
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size < n or np.sum(sv > RANK_TOL * sv[0]) < n:
        return 0.0
    rng = np.random.default_rng(seed)
    best = np.inf
    for start in range(0, samples, 20_000):
        U = _unit_directions(rng, min(20_000, samples - start), n)
        best = min(best, float(np.min(np.max(U @ A, axis=1))))
    return max(best, 0.0)


def intersecting_hulls_check(sig: Signature, basis: MonomialBasis) -> bool:
    """Do conv{x : s = +1} and conv{x : s = -1} intersect? Affine bases only."""
    if basis.degree != 1:
        raise ValueError("the intersecting hulls condition applies to affine bases")
    plus = sig.points[sig.signs > 0]
    minus = sig.points[sig.signs < 0]
    if len(plus) == 0 or len(minus) == 0:
        return False
    m = sig.points.shape[1]
    A = np.zeros((m + 2, len(plus) + len(minus)))
    A[:m, : len(plus)] = plus.T
    A[:m, len(plus):] = -minus.T
    A[m, : len(plus)] = 1.0
    A[m + 1, len(plus):] = 1.0
    b = np.r_[np.zeros(m), 1.0, 1.0]
    res = simplex_max(np.zeros(A.shape[1]), A, b)
    return res.status == "optimal"


def minimal_support(S) -> np.ndarray:
    """Indices of a small column subset whose hull (nearly) contains zero.

    Minimizes ||S lambda||_1 over the simplex with the dense simplex method; a
    basic optimal solution has at most n + 1 nonzero weights.
    """
    A = _as_array(S)
    n, k = A.shape
    M = np.zeros((n + 1, k + 2 * n))
    M[:n, :k] = A
    M[:n, k : k + n] = np.eye(n)
    M[:n, k + n :] = -np.eye(n)
    M[n, :k] = 1.0
    c = np.r_[np.zeros(k), -np.ones(2 * n)]
    res = simplex_max(c, M, np.r_[np.zeros(n), 1.0])
    lam = res.x[:k]
    return np.nonzero(lam > 1e-12)[0]
