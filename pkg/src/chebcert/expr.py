"""Arithmetic expression targets such as ``"x^2"`` or ``"exp(-x1*x2) + sin(x2)"``.

Variables are ``x`` (univariate) or ``x1 .. xm``. Allowed: numbers, + - * / ^,
parentheses, sin, cos, exp. Parsing goes through sympy; anything outside the
grammar is rejected before evaluation.
"""

from __future__ import annotations

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from .errors import SchemaError
from .target import ExplicitTarget

_FUNCS = {"sin": sp.sin, "cos": sp.cos, "exp": sp.exp}
_ALLOWED = (sp.Add, sp.Mul, sp.Pow, sp.Symbol, sp.Number, sp.NumberSymbol, sp.sin, sp.cos, sp.exp)


def _symbols(m: int):
    if m == 1:
        x = sp.Symbol("x", real=True)
        return [x], {"x": x, "x1": x}
    xs = [sp.Symbol(f"x{j + 1}", real=True) for j in range(m)]
    return xs, {str(s): s for s in xs}


def parse_target(text: str, m: int) -> ExplicitTarget:
    xs, names = _symbols(m)
    local = dict(names)
    local.update(_FUNCS)
    try:
        expr = parse_expr(
            text,
            local_dict=local,
            global_dict={"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational},
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except Exception as exc:
        raise SchemaError(f"cannot parse expression {text!r}: {exc}") from exc
    if not isinstance(expr, sp.Expr):
        raise SchemaError(f"{text!r} is not an arithmetic expression")
    for node in sp.preorder_traversal(expr):
        if not isinstance(node, _ALLOWED):
            raise SchemaError(f"unsupported construct {type(node).__name__} in {text!r}")
        if isinstance(node, sp.Symbol) and node not in xs:
            raise SchemaError(f"unknown variable {node} in {text!r}")
    grad = [sp.diff(expr, v) for v in xs]
    hess = [[sp.diff(g, v) for v in xs] for g in grad]
    f_num = sp.lambdify(xs, expr, "numpy")
    g_num = sp.lambdify(xs, grad, "numpy")
    h_num = sp.lambdify(xs, hess, "numpy")

    def f(x):
        x = np.asarray(x, dtype=float)
        val = f_num(*np.moveaxis(x, -1, 0))
        return np.broadcast_to(val, x.shape[:-1]).astype(float)

    return ExplicitTarget(
        f,
        lambda x: np.array(g_num(*x), dtype=float),
        lambda x: np.array(h_num(*x), dtype=float),
        m=m,
        name=text,
        vectorized=True,
    )
