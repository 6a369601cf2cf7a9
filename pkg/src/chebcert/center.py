"""Relative Chebyshev centers of envelope pairs (f_minus, f_plus).

The error of p against the family is max(p - f_minus, f_plus - p). An entry
(x, +1) of the signature comes from f_minus and (x, -1) from f_plus, so one
point may carry both signs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import BoxDomain, MonomialBasis, eval_basis
from .certify import OPTIMAL, STRONGLY_UNIQUE, KernelCertificate, certify, subgradient_matrix
from .extrema import Signature
from .oracle import global_error
from .pipeline import ApproxResult, SolveConfig, approximate
from .target import SetValuedTarget


@dataclass
class CenterProblem:
    target: SetValuedTarget
    basis: MonomialBasis
    domain: BoxDomain


@dataclass
class CenterResult:
    a: np.ndarray
    error: float
    signature: Optional[Signature]
    certificate: Optional[KernelCertificate]
    shortcut: Optional[KernelCertificate]
    branch: str  # "minus", "plus" or "both": which envelope attains the norm
    norms: tuple
    run: ApproxResult

    def to_dict(self) -> dict:
        out = self.run.to_dict()
        out["center"] = {
            "branch": self.branch,
            "norm_minus": self.norms[0],
            "norm_plus": self.norms[1],
            "shortcut": None if self.shortcut is None else self.shortcut.to_dict(),
            "families": None if self.signature is None else self.signature.families.tolist(),
        }
        return out


def _envelope_norms(target: SetValuedTarget, basis, a, domain, per_dim=None):
    lo = global_error(target.f_minus, basis, a, domain, per_dim=per_dim)
    hi = global_error(target.f_plus, basis, a, domain, per_dim=per_dim)
    # one-sided errors at the candidate maximizers of both envelopes
    X = np.vstack([np.atleast_2d(x) for x in lo.argmax + hi.argmax])
    p = eval_basis(basis, X) @ a
    n_minus = float(np.max(p - target.f_minus.values(X)))
    n_plus = float(np.max(target.f_plus.values(X) - p))
    return n_minus, n_plus


def solve_center(problem: CenterProblem, config: SolveConfig = SolveConfig(grid=(201,))) -> CenterResult:
    t, basis, domain = problem.target, problem.basis, problem.domain
    # a single function is its own envelope: run the plain solver
    run_target = t.f_minus if t.f_minus is t.f_plus else t
    run = approximate(run_target, basis, domain, config)
    sig, cert, shortcut = run.signature, run.certificate, None
    a = run.a
    if sig is not None and run_target is t:
        sig = Signature(sig.points, sig.signs, abs(run.newton.error),
                        sig.signs * abs(run.newton.error), sig.families, sig.face_masks)
        shortcut = duplicate_point_shortcut(sig)
    norms = _envelope_norms(t, basis, a, domain) if run_target is t else (run.global_value,) * 2
    scale = max(1.0, abs(max(norms)))
    if abs(norms[0] - norms[1]) <= 1e-9 * scale:
        branch = "both"
    else:
        branch = "minus" if norms[0] > norms[1] else "plus"
    err = abs(run.newton.error) if run.newton is not None else float("nan")
    return CenterResult(a, err, sig, cert, shortcut, branch, norms, run)


def duplicate_point_shortcut(sig: Signature, tol: float = 1e-9) -> Optional[KernelCertificate]:
    """Optimal certificate with weights (1/2, 1/2) when one x carries both signs."""
    pts = sig.points
    for i in range(len(sig)):
        for j in range(i + 1, len(sig)):
            if sig.signs[i] != sig.signs[j] and np.max(np.abs(pts[i] - pts[j])) <= tol * max(1.0, np.max(np.abs(pts[i]))):
                lam = np.zeros(len(sig))
                lam[[i, j]] = 0.5
                return KernelCertificate(OPTIMAL, lam, 0, 0.0, len(sig), 0, int(np.sum(lam == 0)),
                                         note=f"point {pts[i].tolist()} carries both signs")
    return None


def levis_strong_check(sig: Signature, basis: MonomialBasis) -> bool:
    """Haar matrix of the support points has rank n and the kernel can be positive."""
    support = np.unique(np.round(sig.points, 12), axis=0)
    H = eval_basis(basis, support)
    sv = np.linalg.svd(H, compute_uv=False)
    if np.sum(sv > 1e-10 * sv[0]) < basis.n:
        return False
    return certify(subgradient_matrix(sig, basis)).status == STRONGLY_UNIQUE
