from __future__ import annotations

from typing import Mapping

from .nodes import (HALF, MINUS_ONE, ONE, ZERO, Add, Const, Div, Expr, Func,
                    Mul, Neg, Pow, Sym, add, as_expr, func, mul, power)
from .simplify import simplify


def free_symbols(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Sym):
            out.add(n.name)
        stack.extend(n.children)
    return out


def depends_on(e: Expr, name: str) -> bool:
    return name in free_symbols(e)


def diff(e: Expr, v: str | Sym) -> Expr:
    """Classical partial derivative; every other symbol is held fixed."""
    name = v.name if isinstance(v, Sym) else v
    e = simplify(e)
    return _diff(e, name, {})


def _diff(e: Expr, v: str, memo: dict[int, Expr]) -> Expr:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = ZERO
    elif isinstance(e, Sym):
        out = ONE if e.name == v else ZERO
    elif isinstance(e, Add):
        out = add(*(_diff(a, v, memo) for a in e.args))
    elif isinstance(e, Mul):
        terms = []
        for i, f in enumerate(e.args):
            df = _diff(f, v, memo)
            if df == ZERO:
                continue
            terms.append(mul(*e.args[:i], df, *e.args[i + 1:]))
        out = add(*terms)
    elif isinstance(e, Pow):
        db = _diff(e.base, v, memo)
        de = _diff(e.exp, v, memo)
        terms = []
        if db != ZERO:
            terms.append(mul(e.exp, power(e.base, add(e.exp, MINUS_ONE)), db))
        if de != ZERO:
            terms.append(mul(e, func("log", e.base), de))
        out = add(*terms)
    elif isinstance(e, Func):
        da = _diff(e.arg, v, memo)
        if da == ZERO:
            out = ZERO
        elif e.name == "sin":
            out = mul(func("cos", e.arg), da)
        elif e.name == "cos":
            out = mul(MINUS_ONE, func("sin", e.arg), da)
        elif e.name == "exp":
            out = mul(e, da)
        elif e.name == "log":
            out = mul(power(e.arg, MINUS_ONE), da)
        elif e.name == "sqrt":
            out = mul(HALF, power(e.arg, Const(-HALF.value)), da)
        else:  # pragma: no cover
            raise ValueError(e.name)
    elif isinstance(e, (Neg, Div)):
        out = _diff(simplify(e), v, memo)
    else:  # pragma: no cover
        raise TypeError(type(e).__name__)
    memo[id(e)] = out
    return out


def substitute(e: Expr, bindings: Mapping[str, object]) -> Expr:
    """Simultaneous replacement of symbols, followed by simplification."""
    table = {k: as_expr(v) for k, v in bindings.items()}
    return simplify(_subs(e, table, {}))


def _subs(e: Expr, table: dict[str, Expr], memo: dict[int, Expr]) -> Expr:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    if isinstance(e, Sym):
        out = table.get(e.name, e)
    elif isinstance(e, Const):
        out = e
    elif isinstance(e, Add):
        out = add(*(_subs(a, table, memo) for a in e.args))
    elif isinstance(e, Mul):
        out = mul(*(_subs(a, table, memo) for a in e.args))
    elif isinstance(e, Pow):
        out = power(_subs(e.base, table, memo), _subs(e.exp, table, memo))
    elif isinstance(e, Func):
        out = func(e.name, _subs(e.arg, table, memo))
    elif isinstance(e, Div):
        out = mul(_subs(e.num, table, memo), power(_subs(e.den, table, memo), MINUS_ONE))
    elif isinstance(e, Neg):
        out = mul(MINUS_ONE, _subs(e.arg, table, memo))
    else:  # pragma: no cover
        raise TypeError(type(e).__name__)
    memo[id(e)] = out
    return out


def linear_coefficients(e: Expr, name: str) -> tuple[Expr, Expr]:
    """Split ``e = c1*name + c0``; raises if ``e`` is not affine in ``name``."""
    c1 = diff(e, name)
    if depends_on(c1, name):
        raise ValueError(f"expression is not linear in {name}")
    c0 = substitute(e, {name: ZERO})
    return c1, c0


def solve_linear(e: Expr, name: str) -> Expr:
    """Solve ``e == 0`` for a symbol it contains affinely."""
    c1, c0 = linear_coefficients(e, name)
    if c1 == ZERO:
        raise ValueError(f"{name} does not occur in the expression")
    return mul(MINUS_ONE, c0, power(c1, MINUS_ONE))


def count_nodes(e: Expr) -> int:
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(n.children)
    return len(seen)
