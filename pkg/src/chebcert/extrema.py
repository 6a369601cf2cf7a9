"""Local maximization of the error, deduplication and signatures."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basis import BoxDomain, MonomialBasis, eval_basis, grad_basis, hess_basis
from .errors import NonConvergence
from .target import HornerTarget, SetValuedTarget, horner_error_terms, horner_masks

LOWER, FREE, UPPER = -1, 0, 1


class ErrorModel:
    """Error of ``p = phi^T a`` against one target family.

    For plain targets ``value`` is the signed error p - f. For a Horner target
    it is the total error |e_0| + u sum |e_j|, differentiated with the
    component signs taken at the evaluation point.
    """

    def __init__(self, target, basis: MonomialBasis, a, family: int = 0):
        self.basis = basis
        self.a = np.asarray(a, dtype=float)
        self.horner = target if isinstance(target, HornerTarget) else None
        self.f = target.families[family]
        if self.horner is not None:
            E = horner_masks(basis.n)
            self._Ea = E * self.a[None, :]  # row j-1 holds the coefficients of e_j

    def components(self, x) -> np.ndarray:
        return horner_error_terms(self.horner, self.basis, self.a, x)

    def _weights(self, x):
        # d e / d a-coefficients of each monomial, given current component signs
        s = np.sign(self.components(x))
        s[s == 0] = 1.0
        return s[0], s[0] * self.a + self.horner.u * (s[1:] @ self._Ea)

    def value(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.horner is None:
            return float(eval_basis(self.basis, x) @ self.a - self.f.value(x))
        e = self.components(x)
        return float(abs(e[0]) + self.horner.u * np.sum(np.abs(e[1:])))

    def grad(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.horner is None:
            return grad_basis(self.basis, x).T @ self.a - self.f.gradient(x)
        s0, w = self._weights(x)
        return grad_basis(self.basis, x).T @ w - s0 * self.f.gradient(x)

    def hess(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.horner is None:
            return np.einsum("nij,n->ij", hess_basis(self.basis, x), self.a) - self.f.hessian(x)
        s0, w = self._weights(x)
        return np.einsum("nij,n->ij", hess_basis(self.basis, x), w) - s0 * self.f.hessian(x)


@dataclass
class ExtremePoint:
    x: np.ndarray
    face_mask: np.ndarray  # -1 pinned lower, +1 pinned upper, 0 free
    error: float  # signed p - f, or the total error in the Horner case
    sign: int
    family: int = 0
    stationarity: float = 0.0

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "face_mask": self.face_mask.tolist(),
            "error": self.error,
            "s": self.sign,
            "family": self.family,
        }


def _face(x, g, domain: BoxDomain, tol):
    mask = np.zeros(x.size, dtype=int)
    at_lo = x <= domain.lower
    at_hi = x >= domain.upper
    # pinned when sitting on a bound and the ascent direction does not point inside
    mask[at_lo & (g <= tol)] = LOWER
    mask[at_hi & (g >= -tol)] = UPPER
    return mask


def polish_extreme(
    target,
    basis: MonomialBasis,
    a,
    x0,
    domain: BoxDomain,
    *,
    family: int = 0,
    sign: Optional[int] = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> ExtremePoint:
    """Projected ascent on s * e(x) with face-restricted Newton steps."""
    model = ErrorModel(target, basis, a, family)
    x = domain.clip(np.atleast_1d(np.asarray(x0, dtype=float)))
    if model.horner is not None:
        s = 1
    elif sign is not None:
        s = int(sign)
    else:
        s = 1 if model.value(x) >= 0 else -1
    w = domain.width
    val = s * model.value(x)
    pg_norm = np.inf
    mask = np.zeros(x.size, dtype=int)
    for _ in range(max_iter):
        g = s * model.grad(x)
        mask = _face(x, g, domain, tol * 1e-3)
        free = mask == FREE
        pg = np.where(free, g, 0.0)
        pg_norm = float(np.max(np.abs(pg * w))) if x.size else 0.0
        if pg_norm <= tol:
            break
        step = pg * w * w
        step *= 0.1 / max(np.max(np.abs(step / w)), 1e-300)
        if np.any(free):
            H = s * model.hess(x)
            Hff = H[np.ix_(free, free)]
            try:
                if np.all(np.linalg.eigvalsh(0.5 * (Hff + Hff.T)) < 0):
                    newton = np.zeros_like(x)
                    newton[free] = -np.linalg.solve(Hff, pg[free])
                    step = newton
            except np.linalg.LinAlgError:
                pass
        alpha, moved = 1.0, False
        for _ in range(60):
            xn = domain.clip(x + alpha * step)
            vn = s * model.value(xn)
            if vn >= val - 1e-15 * (1 + abs(val)):
                moved = not np.array_equal(xn, x)
                x, val = xn, vn
                break
            alpha *= 0.5
        if not moved:
            break
    else:
        raise NonConvergence(f"error maximization did not converge from {np.asarray(x0).tolist()}")
    if pg_norm > max(1e3 * tol, 1e-7):
        raise NonConvergence(
            f"error maximization stalled at {x.tolist()} (projected gradient {pg_norm:.2e})"
        )
    err = model.value(x)
    return ExtremePoint(x, mask, err, s, family, pg_norm)


def dedup(points: Sequence[ExtremePoint], tol: float = 1e-6, domain: Optional[BoxDomain] = None):
    """Merge points closer than ``tol`` (infinity norm, scaled by the box) within a sign/family."""
    if not points:
        return []
    scale = domain.width if domain is not None else 1.0
    order = sorted(range(len(points)), key=lambda i: (-abs(points[i].error), tuple(points[i].x)))
    kept: list[ExtremePoint] = []
    for i in order:
        p = points[i]
        dup = any(
            q.sign == p.sign
            and q.family == p.family
            and np.max(np.abs((q.x - p.x) / scale)) <= tol
            for q in kept
        )
        if not dup:
            kept.append(p)
    kept.sort(key=lambda p: (tuple(p.x), p.family, p.sign))
    return kept


@dataclass
class Signature:
    points: np.ndarray  # (k, m)
    signs: np.ndarray  # (k,)
    norm_value: float
    errors: np.ndarray = None
    families: np.ndarray = None
    face_masks: np.ndarray = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.signs = np.asarray(self.signs, dtype=int).reshape(-1)
        k = self.signs.size
        if self.points.shape[0] != k:
            raise ValueError("points and signs differ in length")
        if self.errors is None:
            self.errors = self.signs * float(self.norm_value)
        if self.families is None:
            self.families = np.zeros(k, dtype=int)
        if self.face_masks is None:
            self.face_masks = np.zeros(self.points.shape, dtype=int)

    def __len__(self):
        return self.signs.size

    @property
    def entries(self):
        return [(self.points[i], int(self.signs[i])) for i in range(len(self))]

    def to_list(self) -> list[dict]:
        return [
            {
                "x": self.points[i].tolist(),
                "s": int(self.signs[i]),
                "error": float(self.errors[i]),
                "family": int(self.families[i]),
                "face_mask": self.face_masks[i].tolist(),
            }
            for i in range(len(self))
        ]

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump({"norm": self.norm_value, "entries": self.to_list()}, fh, indent=2)

    @classmethod
    def from_extremes(cls, extremes: Sequence[ExtremePoint], norm_value=None) -> "Signature":
        if not extremes:
            raise ValueError("empty signature")
        errs = np.array([e.error for e in extremes])
        return cls(
            np.array([e.x for e in extremes]),
            np.array([e.sign for e in extremes]),
            float(np.max(np.abs(errs))) if norm_value is None else norm_value,
            errs,
            np.array([e.family for e in extremes]),
            np.array([e.face_mask for e in extremes]),
        )


def signature_of(target, basis: MonomialBasis, a, extremes) -> Signature:
    """Signs from sign(p - f) at the given extreme points."""
    pts = [np.atleast_1d(np.asarray(getattr(e, "x", e), dtype=float)) for e in extremes]
    if not pts:
        raise ValueError("signature needs at least one extreme point")
    X = np.array(pts)
    f = target.families[0]
    errs = eval_basis(basis, X) @ np.asarray(a, dtype=float) - f.values(X)
    signs = np.where(errs >= 0, 1, -1)
    masks = [getattr(e, "face_mask", np.zeros(X.shape[1], dtype=int)) for e in extremes]
    return Signature(X, signs, float(np.max(np.abs(errs))), errs, None, np.array(masks))


def set_valued_signature(
    target: SetValuedTarget, basis: MonomialBasis, a, extremes, tol: float = 1e-9
) -> Signature:
    """Entries (x, +1) where p - f_minus attains the norm, (x, -1) where f_plus - p does."""
    X = np.array([np.atleast_1d(np.asarray(getattr(e, "x", e), dtype=float)) for e in extremes])
    p = eval_basis(basis, X) @ np.asarray(a, dtype=float)
    lo = p - target.f_minus.values(X)
    hi = target.f_plus.values(X) - p
    norm = float(max(np.max(lo), np.max(hi)))
    thr = tol * max(1.0, abs(norm))
    pts, signs, errs, fams = [], [], [], []
    for i in range(X.shape[0]):
        if lo[i] >= norm - thr:
            pts.append(X[i]); signs.append(1); errs.append(lo[i]); fams.append(0)
        if hi[i] >= norm - thr:
            pts.append(X[i]); signs.append(-1); errs.append(-hi[i]); fams.append(1)
    return Signature(np.array(pts), np.array(signs), norm, np.array(errs), np.array(fams))


@dataclass
class VectorSignature:
    points: np.ndarray  # (K, 1)
    signs: np.ndarray  # (K, n + 1) component signs
    source: np.ndarray = field(default=None)  # index of the extreme each entry came from

    def __len__(self):
        return self.signs.shape[0]

    def to_list(self) -> list[dict]:
        return [{"x": self.points[i].tolist(), "s": self.signs[i].tolist()} for i in range(len(self))]


def extended_signature(
    target: HornerTarget, basis: MonomialBasis, a, extremes, eps_zero: Optional[float] = None
) -> VectorSignature:
    """Component sign vectors; a zero component is listed with both signs."""
    X = np.array([np.atleast_1d(np.asarray(getattr(e, "x", e), dtype=float)) for e in extremes])
    comps = np.array([horner_error_terms(target, basis, a, x) for x in X])
    if eps_zero is None:
        eps_zero = 1e-12 * max(1.0, float(np.max(np.abs(comps))))
    pts, signs, src = [], [], []
    for i, e in enumerate(comps):
        zero = np.nonzero(np.abs(e) <= eps_zero)[0]
        base = np.where(e >= 0, 1, -1)
        for choice in itertools.product((1, -1), repeat=zero.size):
            s = base.copy()
            s[zero] = choice
            pts.append(X[i]); signs.append(s); src.append(i)
    return VectorSignature(np.array(pts), np.array(signs), np.array(src))
