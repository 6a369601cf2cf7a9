"""Implicitly defined targets h(x, theta) = 0 and the DexTAR inverse model."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .basis import BoxDomain
from .errors import NonConvergence, SingularJacobian
from .target import fd_jacobian


class ImplicitTarget:
    """theta_l(x) defined by h(x, theta) = 0, followed by continuation.

    The solution branch is fixed by a seed pair ``(x0, theta0)``. Every solve
    starts from the nearest previously solved point, so evaluating over a grid
    sweeps outwards from the seed without jumping branches. ``output_index`` is
    zero-based.
    """

    def __init__(
        self,
        h: Callable,
        output_index: int,
        seed_x,
        seed_theta,
        h_theta: Optional[Callable] = None,
        h_x: Optional[Callable] = None,
        *,
        tol: float = 1e-12,
        max_iter: int = 50,
        name: str = "implicit",
    ):
        self.h = h
        self._h_theta = h_theta
        self._h_x = h_x
        self.output_index = int(output_index)
        self.seed_x = np.asarray(seed_x, dtype=float)
        self.tol = tol
        self.max_iter = max_iter
        self.name = name
        self.m = self.seed_x.size
        theta0 = np.asarray(seed_theta, dtype=float)
        self.q = theta0.size
        if not 0 <= self.output_index < self.q:
            raise ValueError("output index out of range")
        theta0 = self._newton(self.seed_x, theta0)
        self.seed_theta = theta0
        self._xs = [self.seed_x.copy()]
        self._thetas = [theta0.copy()]
        self._tree = None

    def __repr__(self):
        return f"ImplicitTarget({self.name!r}, l={self.output_index + 1})"

    # -- model derivatives -------------------------------------------------
    def h_theta(self, x, theta) -> np.ndarray:
        if self._h_theta is not None:
            return np.asarray(self._h_theta(x, theta), dtype=float)
        return fd_jacobian(lambda t: self.h(x, t), theta).reshape(self.q, self.q)

    def h_x(self, x, theta) -> np.ndarray:
        if self._h_x is not None:
            return np.asarray(self._h_x(x, theta), dtype=float)
        return fd_jacobian(lambda y: self.h(y, theta), x).reshape(self.q, self.m)

    # -- inner Newton ------------------------------------------------------
    def _newton(self, x, theta) -> np.ndarray:
        theta = np.array(theta, dtype=float)
        res = np.asarray(self.h(x, theta), dtype=float)
        for _ in range(self.max_iter):
            # polish past the tolerance; the step test below ends at the rounding floor
            if np.max(np.abs(res)) <= 1e-3 * self.tol:
                return theta
            J = self.h_theta(x, theta)
            try:
                step = np.linalg.solve(J, res)
            except np.linalg.LinAlgError as exc:
                raise SingularJacobian(f"dh/dtheta singular at x={x.tolist()}") from exc
            if not np.all(np.isfinite(step)):
                raise SingularJacobian(f"dh/dtheta singular at x={x.tolist()}")
            theta = theta - step
            new_res = np.asarray(self.h(x, theta), dtype=float)
            # rounding floor: stop once the step no longer moves theta
            if np.max(np.abs(step)) <= 1e-15 * (1 + np.max(np.abs(theta))):
                res = new_res
                break
            res = new_res
        if np.max(np.abs(res)) <= self.tol:
            return theta
        raise NonConvergence(
            f"inner Newton did not converge at x={np.asarray(x).tolist()} (|h|={np.max(np.abs(res)):.3e})"
        )

    def _nearest(self, x) -> tuple[np.ndarray, np.ndarray]:
        # tree over an indexed prefix, brute force over the recent tail
        n_indexed = 0 if self._tree is None else self._tree.n
        tail = len(self._xs) - n_indexed
        if self._tree is None or tail > max(64, n_indexed):
            self._tree = cKDTree(np.array(self._xs))
            n_indexed, tail = len(self._xs), 0
        d_best, i_best = self._tree.query(x)
        if tail:
            recent = np.array(self._xs[n_indexed:])
            d = np.linalg.norm(recent - x, axis=1)
            j = int(np.argmin(d))
            if d[j] < d_best:
                i_best = n_indexed + j
        return self._xs[i_best], self._thetas[i_best]

    def _remember(self, x, theta):
        self._xs.append(np.array(x, dtype=float))
        self._thetas.append(np.array(theta, dtype=float))

    def solve(self, x) -> np.ndarray:
        """theta with h(x, theta) = 0 on the seeded branch."""
        x = np.asarray(x, dtype=float)
        x_near, th_near = self._nearest(x)
        pieces = 1
        while True:
            try:
                th = th_near.copy()
                for s in range(1, pieces + 1):
                    th = self._newton(x_near + (x - x_near) * s / pieces, th)
                break
            except (NonConvergence, SingularJacobian):
                pieces *= 2
                if pieces > 64:
                    raise
        if np.linalg.norm(x - x_near) > 0:
            self._remember(x, th)
        return th

    def implicit_eval(self, x) -> tuple[np.ndarray, float]:
        th = self.solve(x)
        return th, float(th[self.output_index])

    def implicit_grad(self, x, theta) -> np.ndarray:
        """Row l of -(dh/dtheta)^{-1} dh/dx."""
        x = np.asarray(x, dtype=float)
        J = self.h_theta(x, theta)
        if np.linalg.cond(J) > 1e14:
            raise SingularJacobian(f"dh/dtheta singular at x={x.tolist()}")
        D = -np.linalg.solve(J, self.h_x(x, theta))
        return D[self.output_index]

    # -- target interface --------------------------------------------------
    def value(self, x) -> float:
        return self.implicit_eval(x)[1]

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        # sweep outward from the seed so each solve warm-starts from a neighbour
        order = np.argsort(np.linalg.norm(X - self.seed_x, axis=1), kind="stable")
        out = np.empty(X.shape[0])
        for i in order:
            out[i] = self.value(X[i])
        return out

    def gradient(self, x) -> np.ndarray:
        th = self.solve(x)
        return self.implicit_grad(x, th)

    def hessian(self, x) -> np.ndarray:
        H = fd_jacobian(self.gradient, np.asarray(x, dtype=float), h=1e-5)
        return 0.5 * (H + H.T)

    @property
    def families(self):
        return (self,)


# ---------------------------------------------------------------------------
# DexTAR five-bar mechanism

DEXTAR_BASE = 59.0
DEXTAR_ARM = 90.0
DEXTAR_DOMAIN = ((0.0, 2.0), (40.0, 42.0))  # (lower corner, upper corner): [0, 40] x [2, 42]


def dextar_h(x, theta, l=DEXTAR_BASE, L=DEXTAR_ARM):
    """Mirror-symmetric geometric model, scaled by 1/L^2."""
    c1, s1 = math.cos(theta[0]), math.sin(theta[0])
    c2, s2 = math.cos(theta[1]), math.sin(theta[1])
    r1 = (-l + L * c1 - x[0]) ** 2 + (L * s1 - x[1]) ** 2 - L * L
    r2 = (l + L * c2 - x[0]) ** 2 + (L * s2 - x[1]) ** 2 - L * L
    return np.array([r1, r2]) / (L * L)


def dextar_h_theta(x, theta, l=DEXTAR_BASE, L=DEXTAR_ARM):
    c1, s1 = math.cos(theta[0]), math.sin(theta[0])
    c2, s2 = math.cos(theta[1]), math.sin(theta[1])
    d11 = 2 * (-l + L * c1 - x[0]) * (-L * s1) + 2 * (L * s1 - x[1]) * (L * c1)
    d22 = 2 * (l + L * c2 - x[0]) * (-L * s2) + 2 * (L * s2 - x[1]) * (L * c2)
    return np.array([[d11, 0.0], [0.0, d22]]) / (L * L)


def dextar_h_x(x, theta, l=DEXTAR_BASE, L=DEXTAR_ARM):
    c1, s1 = math.cos(theta[0]), math.sin(theta[0])
    c2, s2 = math.cos(theta[1]), math.sin(theta[1])
    return (
        np.array(
            [
                [-2 * (-l + L * c1 - x[0]), -2 * (L * s1 - x[1])],
                [-2 * (l + L * c2 - x[0]), -2 * (L * s2 - x[1])],
            ]
        )
        / (L * L)
    )


def dextar_home(l=DEXTAR_BASE, L=DEXTAR_ARM) -> np.ndarray:
    """End-effector position at theta = (pi/2, pi/2)."""
    return np.array([0.0, L - math.sqrt(L * L - l * l)])


def dextar_target(output: int, l=DEXTAR_BASE, L=DEXTAR_ARM) -> ImplicitTarget:
    """Inverse geometric model theta_output(x), output in {1, 2}."""
    if output not in (1, 2):
        raise ValueError("DexTAR output index must be 1 or 2")
    return ImplicitTarget(
        lambda x, t: dextar_h(x, t, l, L),
        output - 1,
        dextar_home(l, L),
        [math.pi / 2, math.pi / 2],
        lambda x, t: dextar_h_theta(x, t, l, L),
        lambda x, t: dextar_h_x(x, t, l, L),
        name=f"dextar:{output}",
    )


def dextar_domain() -> BoxDomain:
    return BoxDomain(np.array(DEXTAR_DOMAIN[0]), np.array(DEXTAR_DOMAIN[1]))
