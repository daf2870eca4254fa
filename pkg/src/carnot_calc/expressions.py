"""Graph functions from text: a small arithmetic grammar and polynomial tables.

Grammar (Python expression syntax, evaluated elementwise on numpy arrays):

    expr  := number | name | expr op expr | -expr | +expr | call | compare
    op    := + - * / ** %
    call  := f(expr, ...)  with f in FUNCTIONS
    compare := expr (< <= > >= == !=) expr      -> 1.0 or 0.0

Names are W-coordinate names of the splitting (``x2``, ``y21``, also
``x_2``), user parameters, and the constants ``pi`` and ``e``.  Piecewise
definitions use ``where(cond, a, b)``.
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Mapping, Sequence, Union

import numpy as np

from .splitting import Box, GraphFunction, Splitting


class ExpressionError(ValueError):
    pass


FUNCTIONS: dict = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "cbrt": np.cbrt,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sgn": np.sign,
    "chi": lambda x: (np.asarray(x) >= 0).astype(float),
    "min": np.minimum,
    "max": np.maximum,
    "where": lambda c, a, b: np.where(np.asarray(c) != 0, a, b),
    "pow": np.power,
    # signed power |x|^p sgn(x), handy for cusp-type examples
    "spow": lambda x, p: np.sign(x) * np.abs(x) ** p,
}

CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.Mod: operator.mod,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_COMPARE = {
    ast.Lt: operator.lt,
    ast.LtE: operator.le,
    ast.Gt: operator.gt,
    ast.GtE: operator.ge,
    ast.Eq: operator.eq,
    ast.NotEq: operator.ne,
}


class Expression:
    """A parsed, validated expression; ``names`` lists the free variables it uses."""

    def __init__(self, text: str, allowed: Sequence[str] = ()):
        self.text = text
        try:
            self.tree = ast.parse(text.strip(), mode="eval").body
        except SyntaxError as exc:
            raise ExpressionError(f"syntax error in '{text}' at column {exc.offset}: {exc.msg}") from None
        self.names = set()
        self._check(self.tree)
        unknown = self.names - set(allowed) - set(CONSTANTS) if allowed else set()
        if unknown:
            raise ExpressionError(f"unknown name(s) {sorted(unknown)} in '{text}'; allowed: {sorted(allowed)}")

    def _check(self, node) -> None:
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"only numeric literals are allowed, got {node.value!r}")
        elif isinstance(node, ast.Name):
            self.names.add(node.id)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} is not allowed")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ExpressionError(f"unary operator {type(node.op).__name__} is not allowed")
            self._check(node.operand)
        elif isinstance(node, ast.Compare):
            for op in node.ops:
                if type(op) not in _COMPARE:
                    raise ExpressionError(f"comparison {type(op).__name__} is not allowed")
            self._check(node.left)
            for c in node.comparators:
                self._check(c)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                name = getattr(node.func, "id", "?")
                raise ExpressionError(f"unknown function '{name}'; known: {sorted(FUNCTIONS)}")
            if node.keywords:
                raise ExpressionError("keyword arguments are not allowed")
            for a in node.args:
                self._check(a)
        else:
            raise ExpressionError(f"construct {type(node).__name__} is not allowed")

    def __call__(self, env: Mapping[str, object]):
        return self._eval(self.tree, env)

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            raise ExpressionError(f"unbound name '{node.id}'")
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            out = True
            for op, c in zip(node.ops, node.comparators):
                right = self._eval(c, env)
                out = np.logical_and(out, _COMPARE[type(op)](left, right))
                left = right
            return np.asarray(out, dtype=float)
        return FUNCTIONS[node.func.id](*(self._eval(a, env) for a in node.args))


def _w_env_names(sp: Splitting) -> list:
    return list(sp.w_names())


def _aliases(name: str) -> list:
    # x2 <-> x_2, y21 <-> y_21
    if "_" in name:
        return [name.replace("_", "")]
    head = name.rstrip("0123456789")
    return [f"{head}_{name[len(head):]}"] if head != name else []


def _env(sp: Splitting, w: np.ndarray, params: Mapping[str, float]) -> dict:
    env = {k: float(v) for k, v in params.items()}
    for i, nm in enumerate(_w_env_names(sp)):
        env[nm] = w[..., i]
        for al in _aliases(nm):
            env[al] = w[..., i]
    return env


def _allowed(sp: Splitting, params) -> list:
    names = list(params)
    for nm in _w_env_names(sp):
        names += [nm] + _aliases(nm)
    return names


def expression_function(
    sp: Splitting,
    exprs: Union[str, Sequence[str]],
    params: Mapping[str, float] = None,
    domain: Box = None,
    name: str = "expr",
) -> GraphFunction:
    """φ: W → L with one expression per L-coordinate; the Jacobian is by finite differences."""
    params = dict(params or {})
    if isinstance(exprs, str):
        exprs = [exprs]
    if len(exprs) != sp.k:
        raise ExpressionError(f"need {sp.k} expression(s) for dim L = {sp.k}, got {len(exprs)}")
    allowed = _allowed(sp, params)
    parsed = [Expression(e, allowed) for e in exprs]

    def func(w):
        w = np.asarray(w, dtype=float)
        env = _env(sp, w, params)
        cols = [np.broadcast_to(np.asarray(p(env), dtype=float), w.shape[:-1]) for p in parsed]
        return np.stack(cols, axis=-1)

    meta = {"source": "expression", "exprs": list(exprs), "params": params}
    return GraphFunction(sp, func, domain=domain, smoothness="continuous", name=name, meta=meta)


def polynomial_function(
    sp: Splitting,
    terms: Sequence,
    domain: Box = None,
    name: str = "poly",
) -> GraphFunction:
    """φ from a coefficient table, with an exact gradient.

    ``terms`` is a list (one per L-coordinate when k > 1, else a single
    list) of ``{"coef": c, "powers": {"x2": 1, "x3": 2}}`` entries, or of
    ``[c, [e_1, ..., e_d]]`` pairs with exponents in W-coordinate order.
    """
    d = sp.dim_w
    names = _w_env_names(sp)
    lookup = {}
    for i, nm in enumerate(names):
        lookup[nm] = i
        for al in _aliases(nm):
            lookup[al] = i
    rows = terms if (sp.k > 1) else [terms]
    if len(rows) != sp.k:
        raise ExpressionError(f"need {sp.k} coefficient tables, got {len(rows)}")
    tables = []
    for row in rows:
        coefs, exps = [], []
        for t in row:
            e = np.zeros(d, dtype=int)
            if isinstance(t, Mapping):
                c = float(t["coef"])
                for nm, p in dict(t.get("powers", {})).items():
                    if nm not in lookup:
                        raise ExpressionError(f"unknown coordinate '{nm}' in polynomial; known: {names}")
                    e[lookup[nm]] = int(p)
            else:
                c, pw = t
                c = float(c)
                if len(pw) != d:
                    raise ExpressionError(f"exponent vector needs {d} entries")
                e[:] = [int(p) for p in pw]
            if np.any(e < 0):
                raise ExpressionError("negative exponents are not polynomial")
            coefs.append(c)
            exps.append(e)
        tables.append((np.array(coefs, dtype=float), np.array(exps, dtype=int).reshape(-1, d)))

    def monomials(w, E):
        return np.prod(w[..., None, :] ** E, axis=-1)

    def func(w):
        w = np.asarray(w, dtype=float)
        return np.stack([monomials(w, E) @ c for c, E in tables], axis=-1)

    def grad(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape[:-1] + (sp.k, d))
        for r, (c, E) in enumerate(tables):
            for i in range(d):
                Ei = E.copy()
                mult = Ei[:, i].astype(float)
                Ei[:, i] = np.maximum(Ei[:, i] - 1, 0)
                out[..., r, i] = monomials(w, Ei) @ (c * mult)
        return out

    meta = {"source": "polynomial", "terms": [[[float(a), b.tolist()] for a, b in zip(c, E)] for c, E in tables]}
    return GraphFunction(sp, func, domain=domain, smoothness="C1", gradient=grad, name=name, meta=meta)


def function_from_spec(sp: Splitting, spec: Mapping, params: Mapping[str, float] = None) -> GraphFunction:
    """Build φ from a config block: ``{"expr": ...}``, ``{"polynomial": [...]}``."""
    dom = Box(spec["domain"]["lo"], spec["domain"]["hi"]) if "domain" in spec else None
    name = spec.get("name", "phi")
    if "expr" in spec:
        merged = dict(spec.get("params", {}))
        merged.update(params or {})
        return expression_function(sp, spec["expr"], merged, dom, name)
    if "polynomial" in spec:
        return polynomial_function(sp, spec["polynomial"], dom, name)
    raise ExpressionError("function block needs 'expr' or 'polynomial'")

