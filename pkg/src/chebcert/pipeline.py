"""End-to-end two-step solve: LP, polishing, Newton, certificate, oracle."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .basis import BoxDomain, MonomialBasis
from .certify import (
    KernelCertificate,
    certify,
    minimal_support,
    subgradient_matrix,
)
from .extrema import ExtremePoint, Signature, dedup, extended_signature, polish_extreme
from .errors import ChebcertError, KernelDimensionTooHigh
from .implicit import ImplicitTarget
from .minimax_lp import LpSolution, active_indices, discrete_minimax, regular_grid
from .newton import (
    NewtonReport,
    NewtonVariables,
    SolutionAudit,
    audit_solution,
    init_kernel,
    newton_solve,
    NewtonSystem,
)
from .oracle import GlobalError, global_error
from .target import HornerTarget, SetValuedTarget

SCHEMA_VERSION = 1


@dataclass
class SolveConfig:
    grid: tuple = (36,)
    dual_tol: float = 1e-8
    dedup_tol: float = 1e-6
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    oracle_per_dim: Optional[int] = None
    oracle: bool = True
    sharpness_samples: int = 0
    seed: int = 0


@dataclass
class ApproxResult:
    basis: MonomialBasis
    domain: BoxDomain
    lp: LpSolution
    n_active: int
    extremes: list
    init: Optional[NewtonVariables]
    newton: Optional[NewtonReport] = None
    signature: Optional[Signature] = None
    certificate: Optional[KernelCertificate] = None
    audit: Optional[SolutionAudit] = None
    oracle: Optional[GlobalError] = None
    failure: Optional[str] = None
    timings: dict = field(default_factory=dict)

    @property
    def a(self) -> np.ndarray:
        return self.newton.final.a if self.newton is not None else self.lp.a

    @property
    def newton_error(self) -> float:
        return abs(self.newton.error) if self.newton is not None else float("nan")

    @property
    def global_value(self) -> float:
        return self.oracle.value if self.oracle is not None else float("nan")

    def row(self) -> dict:
        c = self.certificate
        return {
            "deg": self.basis.degree,
            "n": self.basis.n,
            "act": self.n_active,
            "ext": len(self.extremes),
            "zero": None if c is None or c.lam is None else c.zero_count,
            "discrete": self.lp.t,
            "newton": self.newton_error,
            "global": self.global_value,
            "status": c.status if c is not None else "Failed",
        }

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "basis": self.basis.to_manifest(),
            "domain": self.domain.to_dict(),
            "summary": self.row(),
            "a": self.a.tolist(),
            "lp": {"t": self.lp.t, "a": self.lp.a.tolist(), "condition": self.lp.condition,
                   "iterations": self.lp.iterations, "active": self.n_active},
            "newton": None if self.newton is None else {
                "iterations": self.newton.iterations,
                "residual_history": self.newton.residual_history,
                "converged": self.newton.converged,
                "quadratic_ratio": self.newton.quadratic_ratio,
            },
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "audit": None if self.audit is None else self.audit.to_dict(),
            "oracle": None if self.oracle is None else self.oracle.to_dict(),
            "failure": self.failure,
        }


def polish_active(target, basis, domain, lp: LpSolution, dual_tol: float, dedup_tol: float):
    """Polish every active index against its own family, then deduplicate."""
    act = active_indices(lp, dual_tol)
    pts = []
    for ai in act:
        sign = None if isinstance(target, HornerTarget) else ai.side
        pts.append(polish_extreme(target, basis, lp.a, ai.x, domain, family=ai.family, sign=sign))
    return act, dedup(pts, dedup_tol, domain)


def initial_variables(target, basis, extremes: list[ExtremePoint], a) -> NewtonVariables:
    """Start values for Newton; more than n + 1 extremes are cut to a minimal support."""
    try:
        return _initial_variables(target, basis, extremes, a)
    except KernelDimensionTooHigh:
        X = np.array([e.x for e in extremes])
        S = subgradient_matrix(Signature(X, [e.sign for e in extremes], 1.0), basis)
        keep = minimal_support(S)
        if len(keep) == len(extremes):
            raise
        return _initial_variables(target, basis, [extremes[i] for i in keep], a)


def _initial_variables(target, basis, extremes: list[ExtremePoint], a) -> NewtonVariables:
    X = np.array([e.x for e in extremes])
    masks = np.array([e.face_mask for e in extremes])
    fams = np.array([e.family for e in extremes])
    if isinstance(target, HornerTarget):
        vs = extended_signature(target, basis, a, extremes, eps_zero=0.0)
        signs = vs.signs
        S = subgradient_matrix(vs, basis, target)
    else:
        signs = np.array([e.sign for e in extremes])
        S = subgradient_matrix(Signature(X, signs, 1.0), basis)
    lam = init_kernel(S)
    theta = np.array([target.solve(x) for x in X]) if isinstance(target, ImplicitTarget) else None
    return NewtonVariables(np.array(a, dtype=float), X, lam, masks, signs, fams, theta)


def final_certificate(target, basis, v: NewtonVariables, samples: int = 0, seed: int = 0):
    if isinstance(target, HornerTarget):
        from .extrema import VectorSignature

        sig = VectorSignature(v.X, np.atleast_2d(v.signs))
        S = subgradient_matrix(sig, basis, target)
    else:
        sig = Signature(v.X, v.signs, 1.0, families=v.families, face_masks=v.masks)
        S = subgradient_matrix(sig, basis)
    return sig, S, certify(S, sharpness_samples=samples, seed=seed)


def approximate(target, basis: MonomialBasis, domain: BoxDomain, config: SolveConfig = SolveConfig(),
                init: Optional[NewtonVariables] = None) -> ApproxResult:
    """Run the whole pipeline; failures after the LP are recorded, not raised."""
    t0 = time.perf_counter()
    grid = regular_grid(domain, config.grid)
    if isinstance(target, SetValuedTarget):
        target.check_ordered(grid.points)
    lp = discrete_minimax(target, basis, grid)
    t1 = time.perf_counter()
    res = ApproxResult(basis, domain, lp, 0, [], init)
    res.timings["lp"] = t1 - t0
    try:
        if init is None:
            act, res.extremes = polish_active(target, basis, domain, lp, config.dual_tol, config.dedup_tol)
            res.n_active = len(act)
            res.init = initial_variables(target, basis, res.extremes, lp.a)
        t2 = time.perf_counter()
        res.timings["polish"] = t2 - t1
        system = NewtonSystem(target, basis, domain, res.init)
        res.newton = newton_solve(system, tol=config.newton_tol, max_iter=config.newton_max_iter)
        res.audit = audit_solution(system, res.newton.final)
        res.signature, _, res.certificate = final_certificate(
            target, basis, res.newton.final, config.sharpness_samples, config.seed
        )
    except ChebcertError as exc:
        res.failure = f"{type(exc).__name__}: {exc}"
        rep = getattr(exc, "report", None)
        if rep is not None:
            res.newton = rep
    t3 = time.perf_counter()
    res.timings["newton"] = t3 - t1 - res.timings.get("polish", 0.0)
    if config.oracle:
        extra = res.newton.final.X if res.newton is not None else ()
        res.oracle = global_error(target, basis, res.a, domain, per_dim=config.oracle_per_dim,
                                  extra_points=extra)
    res.timings["oracle"] = time.perf_counter() - t3
    return res
