from __future__ import annotations

from .nodes import (MINUS_ONE, Add, Const, Div, Expr, Func, Mul, Neg, Pow,
                    Sym, add, func, mul, power)


def simplify(e: Expr) -> Expr:
    """Return the canonical form of ``e``.

    Canonical trees are rebuilt only where a raw node is found, so calling
    this on an already canonical tree is cheap and returns it unchanged.
    """
    if e.canonical:
        return e
    memo: dict[int, Expr] = {}
    return _simp(e, memo)


def _simp(e: Expr, memo: dict[int, Expr]) -> Expr:
    if e.canonical:
        return e
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    if isinstance(e, (Const, Sym)):
        out = e
    elif isinstance(e, Add):
        out = add(*(_simp(a, memo) for a in e.args))
    elif isinstance(e, Mul):
        out = mul(*(_simp(a, memo) for a in e.args))
    elif isinstance(e, Div):
        out = mul(_simp(e.num, memo), power(_simp(e.den, memo), MINUS_ONE))
    elif isinstance(e, Neg):
        out = mul(MINUS_ONE, _simp(e.arg, memo))
    elif isinstance(e, Pow):
        out = power(_simp(e.base, memo), _simp(e.exp, memo))
    elif isinstance(e, Func):
        out = func(e.name, _simp(e.arg, memo))
    else:  # pragma: no cover
        raise TypeError(f"unknown node {type(e).__name__}")
    memo[id(e)] = out
    return out
