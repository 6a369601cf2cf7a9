"""Total-degree monomial bases on boxes.

Monomials are stored as an exponent matrix in graded lexicographic order:
total degree ascending, then lexicographically descending exponents, so the
constant monomial is always first and ``(1, x1, ..., xm)`` follows it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != up.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(lo < up):
            raise ValueError(f"empty box: lower={lo}, upper={up}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @classmethod
    def unit(cls, m: int) -> "BoxDomain":
        return cls(np.zeros(m), np.ones(m))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "BoxDomain":
        return cls(np.array([lo]), np.array([hi]))

    @property
    def m(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True)
class MonomialBasis:
    m: int
    degree: int
    exponents: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.exponents.shape[0]

    @property
    def indices(self) -> list[tuple[int, ...]]:
        return [tuple(int(e) for e in row) for row in self.exponents]

    def to_manifest(self) -> dict:
        return {"m": self.m, "degree": self.degree, "ordering": "grlex"}

    @classmethod
    def from_manifest(cls, manifest: dict) -> "MonomialBasis":
        if manifest.get("ordering", "grlex") != "grlex":
            raise ValueError(f"unsupported ordering {manifest['ordering']!r}")
        return build_basis(int(manifest["m"]), int(manifest["degree"]))

    def __eq__(self, other):
        return (
            isinstance(other, MonomialBasis)
            and self.m == other.m
            and self.degree == other.degree
        )

    def __hash__(self):
        return hash((self.m, self.degree))


def build_basis(m: int, degree: int) -> MonomialBasis:
    if m < 1:
        raise ValueError("input dimension m must be >= 1")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    rows = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), d):
            e = [0] * m
            for var in combo:
                e[var] += 1
            rows.append(e)
    exps = np.array(rows, dtype=np.int64).reshape(-1, m)
    exps.setflags(write=False)
    assert exps.shape[0] == math.comb(m + degree, degree)
    return MonomialBasis(m, degree, exps)


def _as_points(x, m: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.shape[1] != m:
        raise ValueError(f"expected points of dimension {m}, got shape {x.shape}")
    return pts, single


def _powers(pts: np.ndarray, exps: np.ndarray) -> np.ndarray:
    # (N, n, m) table of x_j ** e_ij; negative exponents are clipped by callers
    return pts[:, None, :] ** exps[None, :, :]


def eval_basis(basis: MonomialBasis, x) -> np.ndarray:
    """Evaluate phi at one point (shape (n,)) or at many points (shape (N, n))."""
    pts, single = _as_points(x, basis.m)
    vals = np.prod(_powers(pts, basis.exponents), axis=2)
    return vals[0] if single else vals


def grad_basis(basis: MonomialBasis, x) -> np.ndarray:
    """Gradients of all monomials: (n, m) for one point, (N, n, m) for many."""
    pts, single = _as_points(x, basis.m)
    exps = basis.exponents
    N, n, m = pts.shape[0], basis.n, basis.m
    out = np.zeros((N, n, m))
    for j in range(m):
        coef = exps[:, j].astype(float)
        shifted = exps.copy()
        shifted[:, j] = np.maximum(shifted[:, j] - 1, 0)
        out[:, :, j] = coef[None, :] * np.prod(_powers(pts, shifted), axis=2)
    return out[0] if single else out


def hess_basis(basis: MonomialBasis, x) -> np.ndarray:
    """Hessians of all monomials: (n, m, m) for one point, (N, n, m, m) for many."""
    pts, single = _as_points(x, basis.m)
    exps = basis.exponents
    N, n, m = pts.shape[0], basis.n, basis.m
    out = np.zeros((N, n, m, m))
    for j in range(m):
        for k in range(j, m):
            shifted = exps.copy()
            if j == k:
                coef = (exps[:, j] * (exps[:, j] - 1)).astype(float)
                shifted[:, j] = np.maximum(shifted[:, j] - 2, 0)
            else:
                coef = (exps[:, j] * exps[:, k]).astype(float)
                shifted[:, j] = np.maximum(shifted[:, j] - 1, 0)
                shifted[:, k] = np.maximum(shifted[:, k] - 1, 0)
            block = coef[None, :] * np.prod(_powers(pts, shifted), axis=2)
            out[:, :, j, k] = block
            out[:, :, k, j] = block
    return out[0] if single else out


def eval_poly(basis: MonomialBasis, a: Sequence[float], x) -> np.ndarray | float:
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.n,):
        raise ValueError(f"coefficient vector must have length {basis.n}")
    vals = eval_basis(basis, x) @ a
    return float(vals) if np.ndim(vals) == 0 else vals


def poly_grad(basis: MonomialBasis, a, x) -> np.ndarray:
    return np.einsum("...nm,n->...m", grad_basis(basis, x), np.asarray(a, dtype=float))


def poly_hess(basis: MonomialBasis, a, x) -> np.ndarray:
    return np.einsum("...nij,n->...ij", hess_basis(basis, x), np.asarray(a, dtype=float))
