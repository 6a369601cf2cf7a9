"""Target functions: explicit, set-valued envelopes, Horner-augmented, tabulated.

Implicitly defined targets live in :mod:`chebcert.implicit`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .basis import MonomialBasis, eval_basis
from .errors import DomainError

Vec = np.ndarray


def fd_gradient(f: Callable[[Vec], float], x: Vec, h: float = 1e-6) -> Vec:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        g[j] = (f(xp) - f(xm)) / (2 * step)
    return g


def fd_jacobian(F: Callable[[Vec], Vec], x: Vec, h: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of a vector function, columns per coordinate."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        step = h * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        cols.append((np.asarray(F(xp)) - np.asarray(F(xm))) / (2 * step))
    return np.stack(cols, axis=-1)


class ExplicitTarget:
    """A real function on R^m with optional analytic derivatives.

    ``f`` takes a single point (shape (m,)). When ``vectorized`` is true it must
    also accept an (N, m) array and return (N,) values.
    """

    def __init__(
        self,
        f: Callable,
        grad: Optional[Callable] = None,
        hess: Optional[Callable] = None,
        *,
        m: Optional[int] = None,
        name: str = "f",
        vectorized: bool = False,
    ):
        self.f = f
        self.grad = grad
        self.hess = hess
        self.m = m
        self.name = name
        self.vectorized = vectorized

    def __repr__(self):
        return f"ExplicitTarget({self.name!r})"

    def value(self, x) -> float:
        return float(self.f(np.asarray(x, dtype=float)))

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.asarray(self.f(X), dtype=float).reshape(-1)
        return np.array([self.value(x) for x in X])

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float).reshape(x.shape)
        return fd_gradient(self.value, x)

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float).reshape(x.size, x.size)
        H = fd_jacobian(self.gradient, x, h=1e-5)
        return 0.5 * (H + H.T)

    # uniform interface shared with the other target kinds
    @property
    def families(self) -> tuple["ExplicitTarget", ...]:
        return (self,)


def runge_target(m: int) -> ExplicitTarget:
    """The multivariate Runge function 1 / (1 + 25 |x|^2)."""
    if m < 1:
        raise ValueError("m must be >= 1")

    def f(x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (1.0 + 25.0 * np.sum(x * x, axis=-1))

    def grad(x):
        d = 1.0 + 25.0 * float(x @ x)
        return -50.0 * x / d**2

    def hess(x):
        d = 1.0 + 25.0 * float(x @ x)
        return -50.0 * np.eye(x.size) / d**2 + 5000.0 * np.outer(x, x) / d**3

    return ExplicitTarget(f, grad, hess, m=m, name=f"runge:{m}", vectorized=True)


def polynomial_target(basis: MonomialBasis, coeffs, name: str = "poly") -> ExplicitTarget:
    """Wrap phi(x)^T c as a target; mostly useful for tests and noise targets."""
    from .basis import poly_grad, poly_hess

    c = np.asarray(coeffs, dtype=float)
    return ExplicitTarget(
        lambda x: eval_basis(basis, x) @ c,
        lambda x: poly_grad(basis, c, x),
        lambda x: poly_hess(basis, c, x),
        m=basis.m,
        name=name,
        vectorized=True,
    )


def monomial_power_target(k: int) -> ExplicitTarget:
    """x -> x**k on the real line."""
    return ExplicitTarget(
        lambda x: np.asarray(x, dtype=float)[..., 0] ** k,
        lambda x: np.array([k * x[0] ** (k - 1)]) if k >= 1 else np.zeros(1),
        lambda x: np.array([[k * (k - 1) * x[0] ** (k - 2)]]) if k >= 2 else np.zeros((1, 1)),
        m=1,
        name=f"x^{k}",
        vectorized=True,
    )


# ---------------------------------------------------------------------------
# set-valued targets


@dataclass
class SetValuedTarget:
    """Envelope pair (f_minus, f_plus) of a totally complete family."""

    f_minus: ExplicitTarget
    f_plus: ExplicitTarget
    name: str = "F"

    @property
    def families(self) -> tuple[ExplicitTarget, ExplicitTarget]:
        return (self.f_minus, self.f_plus)

    @property
    def m(self):
        return self.f_minus.m or self.f_plus.m

    def check_ordered(self, X, tol: float = 1e-12) -> None:
        lo, hi = self.f_minus.values(X), self.f_plus.values(X)
        bad = np.nonzero(lo > hi + tol * (1 + np.abs(hi)))[0]
        if bad.size:
            i = int(bad[0])
            raise DomainError(
                f"f_minus > f_plus at sample {np.asarray(X)[i].tolist()}: {lo[i]} > {hi[i]}"
            )

    @classmethod
    def from_single(cls, f: ExplicitTarget) -> "SetValuedTarget":
        return cls(f, f, name=f.name)


def interval_family_target() -> SetValuedTarget:
    """{x^2 + d x : d in [0, 1]} as its envelope pair."""
    f_minus = ExplicitTarget(
        lambda x: np.asarray(x)[..., 0] ** 2 + np.minimum(np.asarray(x)[..., 0], 0.0),
        lambda x: np.array([2 * x[0] + (1.0 if x[0] < 0 else 0.0)]),
        lambda x: np.array([[2.0]]),
        m=1,
        name="x^2+min(x,0)",
        vectorized=True,
    )
    f_plus = ExplicitTarget(
        lambda x: np.asarray(x)[..., 0] ** 2 + np.maximum(np.asarray(x)[..., 0], 0.0),
        lambda x: np.array([2 * x[0] + (1.0 if x[0] > 0 else 0.0)]),
        lambda x: np.array([[2.0]]),
        m=1,
        name="x^2+max(x,0)",
        vectorized=True,
    )
    return SetValuedTarget(f_minus, f_plus, name="x^2+[0,1]x")


def two_lines_target() -> SetValuedTarget:
    """Envelope of {-x, x + 2} on [-1, 1]."""
    f_minus = ExplicitTarget(
        lambda x: np.minimum(-np.asarray(x)[..., 0], np.asarray(x)[..., 0] + 2),
        lambda x: np.array([-1.0 if -x[0] <= x[0] + 2 else 1.0]),
        lambda x: np.zeros((1, 1)),
        m=1,
        name="min(-x,x+2)",
        vectorized=True,
    )
    f_plus = ExplicitTarget(
        lambda x: np.maximum(-np.asarray(x)[..., 0], np.asarray(x)[..., 0] + 2),
        lambda x: np.array([1.0 if x[0] + 2 >= -x[0] else -1.0]),
        lambda x: np.zeros((1, 1)),
        m=1,
        name="max(-x,x+2)",
        vectorized=True,
    )
    return SetValuedTarget(f_minus, f_plus, name="{-x, x+2}")


# ---------------------------------------------------------------------------
# Horner evaluation-error model


def horner_weights(n: int) -> np.ndarray:
    """c_1 = c_n = 1 and c_j = 2 otherwise."""
    c = np.full(n, 2.0)
    c[0] = 1.0
    c[-1] = 1.0
    return c


def horner_masks(n: int) -> np.ndarray:
    """Diagonals of E_1..E_n as an (n, n) array; row j-1 is diag(E_j)."""
    c = horner_weights(n)
    E = np.zeros((n, n))
    for j in range(n):
        E[j, j:] = c[j]
    return E


@dataclass
class HornerTarget:
    """Approximation error plus first-order Horner evaluation error."""

    base: ExplicitTarget
    u: float = 2.0**-53
    name: str = field(default="")

    def __post_init__(self):
        if self.u < 0:
            raise ValueError("roundoff u must be non-negative")
        if not self.name:
            self.name = f"horner({self.base.name})"

    @property
    def families(self):
        return (self.base,)

    @property
    def m(self):
        return 1


def _check_univariate(basis: MonomialBasis):
    if basis.m != 1:
        raise ValueError("the Horner error model needs a univariate basis")


def horner_error_terms(t: HornerTarget, basis: MonomialBasis, a, x) -> np.ndarray:
    """(e_0, ..., e_n): approximation error then weighted Horner suffix sums."""
    _check_univariate(basis)
    a = np.asarray(a, dtype=float)
    phi = eval_basis(basis, np.atleast_1d(np.asarray(x, dtype=float)))
    E = horner_masks(basis.n)
    e = np.empty(basis.n + 1)
    e[0] = phi @ a - t.base.value(np.atleast_1d(x))
    e[1:] = (E * phi[None, :]) @ a
    return e


def total_error(t: HornerTarget, basis: MonomialBasis, a, x) -> float:
    e = horner_error_terms(t, basis, a, x)
    return float(abs(e[0]) + t.u * np.sum(np.abs(e[1:])))


def horner_error_terms_batch(t: HornerTarget, basis: MonomialBasis, a, X) -> np.ndarray:
    """Vectorized ``horner_error_terms`` over (N, 1) points -> (N, n+1)."""
    _check_univariate(basis)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.asarray(a, dtype=float)
    Phi = eval_basis(basis, X)
    E = horner_masks(basis.n)
    out = np.empty((X.shape[0], basis.n + 1))
    out[:, 0] = Phi @ a - t.base.values(X)
    out[:, 1:] = Phi @ (E * a[None, :]).T
    return out


# ---------------------------------------------------------------------------
# Airy function by Maclaurin series

AIRY_AI0 = 0.355028053887817239260063186004183176397979174199177
AIRY_AIP0 = -0.258819403792806798405183560189203963479091138354934
AIRY_RADIUS = 2.0


def _airy_series(x: np.ndarray, deriv: int = 0, tol: float = 1e-18, max_terms: int = 400):
    # y'' = x y gives c_{k+3} = c_k / ((k+3)(k+2)) with c_0 = Ai(0), c_1 = Ai'(0), c_2 = 0
    x = np.asarray(x, dtype=float)
    c = [AIRY_AI0, AIRY_AIP0, 0.0]
    total = np.zeros_like(x)
    k = 0
    small_run = 0
    while k < max_terms:
        if k >= len(c):
            c.append(c[k - 3] / (k * (k - 1)))
        ck = c[k]
        if k >= deriv and ck != 0.0:
            coef = ck * math.perm(k, deriv)
            term = coef * x ** (k - deriv)
            total = total + term
            if np.max(np.abs(term)) < tol:
                small_run += 1
                if small_run >= 3:
                    break
            else:
                small_run = 0
        k += 1
    return total


def airy_target(radius: float = AIRY_RADIUS) -> ExplicitTarget:
    """Ai(x) on [-radius, radius] by its power series."""

    def guard(x):
        if np.any(np.abs(x) > radius + 1e-12):
            raise DomainError(f"Airy target is only defined on [-{radius}, {radius}]")

    def f(x):
        x = np.asarray(x, dtype=float)
        guard(x)
        return _airy_series(x[..., 0])

    def grad(x):
        guard(x)
        return np.array([_airy_series(x[0], 1)])

    def hess(x):
        guard(x)
        return np.array([[_airy_series(x[0], 2)]])

    return ExplicitTarget(f, grad, hess, m=1, name="airy", vectorized=True)


# ---------------------------------------------------------------------------
# tabulated targets


class TabulatedTarget:
    """Samples (x, f(x)) read from CSV; usable for the LP phase only."""

    def __init__(self, points: np.ndarray, values: np.ndarray, name: str = "table"):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.vals = np.asarray(values, dtype=float).reshape(-1)
        if self.points.shape[0] != self.vals.size:
            raise ValueError("points and values differ in length")
        self.m = self.points.shape[1]
        self.name = name

    @classmethod
    def from_csv(cls, path) -> "TabulatedTarget":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
        data = np.array([[float(v) for v in r] for r in rows])
        return cls(data[:, :-1], data[:, -1], name=str(path))

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            d = np.max(np.abs(self.points - x), axis=1)
            j = int(np.argmin(d))
            if d[j] > 1e-12:
                raise DomainError("tabulated targets can only be evaluated at their samples")
            out[i] = self.vals[j]
        return out

    def value(self, x):
        return float(self.values(np.atleast_2d(x))[0])

    def gradient(self, x):
        raise DomainError("tabulated targets support the LP phase only")

    hessian = gradient

    @property
    def families(self):
        return (self,)
