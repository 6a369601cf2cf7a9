"""Newton refinement of the discrete solution.

Unknowns are the coefficients ``a``, the extreme points ``x_i``, the kernel
weights ``lambda_i`` and, for implicit targets, the model states
``theta_i``. Every extreme carries a weight vector ``w_i`` so that its signed
error is ``E_i = (w_i * phi(x_i))^T a - sigma_i f(x_i)``: ``w_i = s_i`` in the
uniform case, ``w_i = s_0 + u sum_j s_j diag(E_j)`` in the Horner case. The
equations are

* per coordinate: ``x_ij = bound`` when pinned, ``d E_i / d x_ij = 0`` otherwise;
* ``E_i = E_{i+1}`` for consecutive extremes;
* ``sum_i lambda_i w_i * phi(x_i) = 0`` and ``sum_i lambda_i = 1``;
* ``h(x_i, theta_i) = 0`` for implicit targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .basis import BoxDomain, MonomialBasis, eval_basis, grad_basis, hess_basis
from .certify import kernel_vector
from .errors import MaxIterations, SignFlip, SingularNewtonJacobian
from .implicit import ImplicitTarget
from .target import HornerTarget, horner_error_terms, horner_masks


@dataclass
class NewtonVariables:
    a: np.ndarray
    X: np.ndarray  # (k, m)
    lam: np.ndarray  # (k,)
    masks: np.ndarray  # (k, m): -1 pinned lower, +1 pinned upper, 0 free
    signs: np.ndarray  # (k,) or (k, n+1) for the Horner model
    families: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None  # (k, q), implicit targets only

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:  # univariate points given as a flat list
            self.X = self.X[:, None]
        self.lam = np.asarray(self.lam, dtype=float)
        self.masks = np.asarray(self.masks, dtype=int).reshape(self.X.shape)
        self.signs = np.asarray(self.signs, dtype=int)
        if self.families is None:
            self.families = np.zeros(self.X.shape[0], dtype=int)
        if self.theta is not None:
            self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))

    @property
    def k(self) -> int:
        return self.X.shape[0]

    def to_dict(self) -> dict:
        out = {
            "a": self.a.tolist(),
            "x": self.X.tolist(),
            "lambda": self.lam.tolist(),
            "face_masks": self.masks.tolist(),
            "signs": self.signs.tolist(),
            "families": self.families.tolist(),
        }
        if self.theta is not None:
            out["theta"] = self.theta.tolist()
        return out


class NewtonSystem:
    """Square system F(z) = 0 with an analytic (or partly finite-difference) Jacobian."""

    def __init__(self, target, basis: MonomialBasis, domain: BoxDomain, init: NewtonVariables):
        self.target = target
        self.basis = basis
        self.domain = domain
        self.init = init
        self.n, self.m, self.k = basis.n, basis.m, init.k
        self.masks = init.masks.copy()
        self.families = init.families.copy()
        self.implicit = isinstance(target, ImplicitTarget)
        self.horner = isinstance(target, HornerTarget)
        self.q = target.q if self.implicit else 0
        signs = init.signs
        if self.horner:
            if basis.m != 1:
                raise ValueError("the Horner system needs a univariate basis")
            signs = np.atleast_2d(signs)
            if signs.shape != (self.k, self.n + 1):
                raise ValueError("Horner signs must have shape (k, n+1)")
            E = horner_masks(self.n)
            self.W = signs[:, :1] + target.u * (signs[:, 1:] @ E)
            self.sigma = signs[:, 0].astype(float)
            self.fams = [target.base] * self.k
        else:
            signs = signs.reshape(-1)
            if signs.shape != (self.k,):
                raise ValueError("one sign per extreme expected")
            self.W = np.repeat(signs[:, None].astype(float), self.n, axis=1)
            self.sigma = signs.astype(float)
            self.fams = None if self.implicit else [target.families[f] for f in self.families]
        self.signs = signs
        if np.any(self.signs == 0):
            raise ValueError("signs must be nonzero")
        # fixed row scaling of the kernel equations (monomials can be large on wide boxes)
        self.kscale = 1.0 / np.maximum(1.0, np.max(np.abs(eval_basis(basis, init.X)), axis=0))
        self.size = self.n + self.k * self.m + self.k + self.k * self.q

    # -- packing -----------------------------------------------------------
    def pack(self, v: NewtonVariables) -> np.ndarray:
        parts = [v.a, v.X.reshape(-1), v.lam]
        if self.implicit:
            parts.append(v.theta.reshape(-1))
        return np.concatenate(parts)

    def unpack(self, z) -> NewtonVariables:
        n, k, m, q = self.n, self.k, self.m, self.q
        a = z[:n]
        X = z[n : n + k * m].reshape(k, m)
        lam = z[n + k * m : n + k * m + k]
        theta = z[n + k * m + k :].reshape(k, q) if self.implicit else None
        return NewtonVariables(a.copy(), X.copy(), lam.copy(), self.masks.copy(), self.signs.copy(),
                               self.families.copy(), None if theta is None else theta.copy())

    def _ix(self):
        n, k, m = self.n, self.k, self.m
        ia = slice(0, n)
        ix = lambda i: slice(n + i * m, n + (i + 1) * m)
        il = lambda i: n + k * m + i
        it = lambda i: slice(n + k * m + k + i * self.q, n + k * m + k + (i + 1) * self.q)
        return ia, ix, il, it

    # -- target pieces -----------------------------------------------------
    def _f(self, i, x, theta):
        """Value, gradient and Hessian (or implicit blocks) of the target at extreme i."""
        if self.implicit:
            t = self.target
            l = t.output_index
            g = t.implicit_grad(x, theta)
            gx = _fd(lambda y: t.implicit_grad(y, theta), x)
            gt = _fd(lambda th: t.implicit_grad(x, th), theta)
            return theta[l], g, gx, gt
        f = self.fams[i]
        return f.value(x), f.gradient(x), f.hessian(x), None

    # -- residual and Jacobian ----------------------------------------------
    def evaluate(self, z, jacobian: bool = True):
        v = self.unpack(z)
        n, k, m, q = self.n, self.k, self.m, self.q
        ia, ix, il, it = self._ix()
        F = np.zeros(self.size)
        J = np.zeros((self.size, self.size)) if jacobian else None
        Ehat = np.zeros(k)
        dE_dx = np.zeros((k, m))
        lo, hi = self.domain.lower, self.domain.upper
        row = 0
        kernel = np.zeros(n)
        kernel_rows = slice(k * m + k - 1, k * m + k - 1 + n)
        for i in range(k):
            x = v.X[i]
            w = self.W[i]
            th = v.theta[i] if self.implicit else None
            fv, fg, fH, fT = self._f(i, x, th)
            P = eval_basis(self.basis, x)
            G = grad_basis(self.basis, x)
            psi = w * P
            wa = w * v.a
            Ehat[i] = psi @ v.a - self.sigma[i] * fv
            dE_dx[i] = G.T @ wa - (0.0 if self.implicit else self.sigma[i] * fg)
            grad_e = G.T @ wa - self.sigma[i] * fg  # stationarity uses the full gradient
            Hb = hess_basis(self.basis, x) if jacobian else None
            for j in range(m):
                if self.masks[i, j] != 0:
                    bound = lo[j] if self.masks[i, j] < 0 else hi[j]
                    F[row] = x[j] - bound
                    if jacobian:
                        J[row, ix(i).start + j] = 1.0
                else:
                    F[row] = grad_e[j]
                    if jacobian:
                        J[row, ia] = w * G[:, j]
                        J[row, ix(i)] = np.einsum("n,nk->k", wa, Hb[:, j, :]) - self.sigma[i] * fH[j]
                        if self.implicit:
                            J[row, it(i)] = -self.sigma[i] * fT[j]
                row += 1
            kernel += v.lam[i] * psi
            if jacobian:
                J[kernel_rows, il(i)] = self.kscale * psi
                J[kernel_rows, ix(i)] = self.kscale[:, None] * v.lam[i] * (w[:, None] * G)
        # equal signed errors
        for i in range(k - 1):
            F[row] = Ehat[i] - Ehat[i + 1]
            if jacobian:
                J[row, ia] = self.W[i] * eval_basis(self.basis, v.X[i]) - self.W[i + 1] * eval_basis(
                    self.basis, v.X[i + 1]
                )
                J[row, ix(i)] = dE_dx[i]
                J[row, ix(i + 1)] = -dE_dx[i + 1]
                if self.implicit:
                    l = self.target.output_index
                    J[row, it(i).start + l] = -self.sigma[i]
                    J[row, it(i + 1).start + l] = self.sigma[i + 1]
            row += 1
        F[row : row + n] = self.kscale * kernel
        row += n
        F[row] = np.sum(v.lam) - 1.0
        if jacobian:
            J[row, il(0) : il(0) + k] = 1.0
        row += 1
        if self.implicit:
            t = self.target
            for i in range(k):
                F[row : row + q] = t.h(v.X[i], v.theta[i])
                if jacobian:
                    J[row : row + q, ix(i)] = t.h_x(v.X[i], v.theta[i])
                    J[row : row + q, it(i)] = t.h_theta(v.X[i], v.theta[i])
                row += q
        assert row == self.size
        return F, J, Ehat

    def residual(self, z) -> np.ndarray:
        return self.evaluate(z, jacobian=False)[0]

    def jacobian(self, z) -> np.ndarray:
        return self.evaluate(z)[1]

    def snap(self, z) -> np.ndarray:
        """Put pinned coordinates exactly on their bounds."""
        ia, ix, il, it = self._ix()
        z = z.copy()
        for i in range(self.k):
            xi = z[ix(i)]
            xi = np.where(self.masks[i] < 0, self.domain.lower, xi)
            xi = np.where(self.masks[i] > 0, self.domain.upper, xi)
            z[ix(i)] = xi
        return z

    def check_signs(self, z) -> None:
        """Raise SignFlip if an error left the sign frozen at initialization."""
        v = self.unpack(z)
        for i in range(self.k):
            x = v.X[i]
            if self.horner:
                e = horner_error_terms(self.target, self.basis, v.a, x)
                if self.target.u == 0:
                    e[1:] = 0.0  # components without weight cannot flip the model
                bad = np.nonzero(self.signs[i] * e < 0)[0]
                if bad.size:
                    raise SignFlip(f"component {int(bad[0])} of the error changed sign at extreme {i}",
                                   extreme_index=i, component=int(bad[0]))
            else:
                fv = v.theta[i][self.target.output_index] if self.implicit else self.fams[i].value(x)
                e = eval_basis(self.basis, x) @ v.a - fv
                if self.signs[i] * e < 0:
                    raise SignFlip(f"error changed sign at extreme {i}", extreme_index=i, component=0)


def _fd(F: Callable, x, h: float = 1e-7) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        cols.append((np.asarray(F(xp)) - np.asarray(F(xm))) / (2 * step))
    return np.stack(cols, axis=-1)


def build_system_explicit(target, basis, domain, init: NewtonVariables) -> NewtonSystem:
    return NewtonSystem(target, basis, domain, init)


def build_system_implicit(target: ImplicitTarget, basis, domain, init: NewtonVariables) -> NewtonSystem:
    if init.theta is None:
        init = replace(init, theta=np.array([target.solve(x) for x in init.X]))
    return NewtonSystem(target, basis, domain, init)


def build_system_horner(target: HornerTarget, basis, init: NewtonVariables, domain=None) -> NewtonSystem:
    if domain is None:
        raise ValueError("the Horner system needs the approximation interval")
    return NewtonSystem(target, basis, domain, init)


@dataclass
class NewtonReport:
    iterations: int
    residual_history: list
    step_history: list
    converged: bool
    final: NewtonVariables
    quadratic_ratio: list = field(default_factory=list)
    error: float = float("nan")

    def trace_lines(self) -> list[str]:
        lines = []
        for it, r in enumerate(self.residual_history):
            rec = {"iteration": it, "residual": r}
            if it > 0:
                rec["step"] = self.step_history[it - 1]
            lines.append(json.dumps(rec))
        lines.append(json.dumps({"final": self.final.to_dict(), "converged": self.converged}))
        return lines

    def write_trace(self, path):
        with open(path, "w") as fh:
            fh.write("\n".join(self.trace_lines()) + "\n")


def newton_solve(system: NewtonSystem, init: Optional[NewtonVariables] = None, *, tol: float = 1e-12,
                 max_iter: int = 50, callback: Optional[Callable] = None) -> NewtonReport:
    init = system.init if init is None else init
    z = system.snap(system.pack(init))
    F, J, Ehat = system.evaluate(z)
    res = [float(np.max(np.abs(F)))]
    steps = []
    it = 0
    while res[-1] > tol:
        if it >= max_iter:
            exc = MaxIterations(f"Newton did not converge in {max_iter} iterations (residual {res[-1]:.2e})")
            exc.report = _report(system, z, res, steps, False, Ehat)
            raise exc
        try:
            dz = np.linalg.solve(J, F)
        except np.linalg.LinAlgError as exc:
            raise SingularNewtonJacobian("singular Newton Jacobian") from exc
        if not np.all(np.isfinite(dz)) or np.linalg.cond(J) > 1e16:
            raise SingularNewtonJacobian(f"Newton Jacobian is numerically singular (cond {np.linalg.cond(J):.1e})")
        z = system.snap(z - dz)
        it += 1
        system.check_signs(z)
        F, J, Ehat = system.evaluate(z)
        res.append(float(np.max(np.abs(F))))
        steps.append(float(np.max(np.abs(dz))))
        if callback is not None:
            callback(it, res[-1], steps[-1])
        # at the rounding floor the residual stops shrinking; one more step cannot help
        if steps[-1] <= 1e-15 * max(1.0, np.max(np.abs(z))) and res[-1] > tol:
            exc = MaxIterations(f"Newton stalled at residual {res[-1]:.2e}")
            exc.report = _report(system, z, res, steps, False, Ehat)
            raise exc
    return _report(system, z, res, steps, True, Ehat)


def _report(system, z, res, steps, converged, Ehat) -> NewtonReport:
    ratios = [res[i + 1] / res[i] ** 2 for i in range(len(res) - 1) if res[i] > 0]
    return NewtonReport(len(res) - 1, res, steps, converged, system.unpack(z), ratios, float(np.mean(Ehat)))


def init_kernel(S) -> np.ndarray:
    """Kernel estimate of the (approximate) subgradient matrix, smallest singular value dropped."""
    return kernel_vector(S, drop_smallest=True).lam


@dataclass
class SolutionAudit:
    error_spread: float
    kernel_residual: float
    pinned_ok: bool
    stationarity: float
    inside: bool

    def ok(self, tol: float = 1e-10) -> bool:
        return (self.error_spread <= tol and self.kernel_residual <= tol and self.pinned_ok
                and self.stationarity <= tol)

    def to_dict(self):
        return dict(self.__dict__)


def audit_solution(system: NewtonSystem, v: NewtonVariables) -> SolutionAudit:
    z = system.pack(v)
    F, _, Ehat = system.evaluate(z, jacobian=False)
    k, m = system.k, system.m
    stat = F[: k * m].reshape(k, m)
    free = system.masks == 0
    lo, hi = system.domain.lower, system.domain.upper
    pinned_ok = bool(np.all(np.where(system.masks < 0, v.X == lo, True))
                     and np.all(np.where(system.masks > 0, v.X == hi, True)))
    kern = np.sum(v.lam[:, None] * system.W * eval_basis(system.basis, v.X), axis=0)
    return SolutionAudit(
        float(np.max(Ehat) - np.min(Ehat)),
        float(np.max(np.abs(kern))),
        pinned_ok,
        float(np.max(np.abs(stat[free]))) if np.any(free) else 0.0,
        bool(np.all(v.X >= lo - 1e-12) and np.all(v.X <= hi + 1e-12)),
    )
