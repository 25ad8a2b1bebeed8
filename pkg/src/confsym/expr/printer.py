from __future__ import annotations

from fractions import Fraction

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym

# binding strength of the printed form
_SUM, _PROD, _POW, _ATOM = 1, 2, 4, 5


def _const_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _SUM
    if isinstance(e, (Mul, Div, Neg)):
        return _PROD
    if isinstance(e, Const):
        if e.text is not None:
            return _ATOM
        return _ATOM if (e.value >= 0 and e.value.denominator == 1) else _PROD
    if isinstance(e, Pow):
        if e.canonical and isinstance(e.exp, Const) and e.exp.value < 0:
            return _POW
        return _POW
    return _ATOM


def _leading_minus(e: Expr) -> bool:
    if isinstance(e, Neg):
        return True
    if isinstance(e, Const):
        return e.value < 0
    if isinstance(e, Mul):
        return _leading_minus(e.args[0])
    if isinstance(e, Div):
        return _leading_minus(e.num)
    return False


def _wrap(s: str) -> str:
    return f"({s})"


def to_text(e: Expr) -> str:
    """Render ``e`` in the plain-text grammar accepted by ``parse``."""
    if isinstance(e, Const):
        return e.text if e.text is not None else _const_text(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Add):
        return _add_text(e)
    if isinstance(e, Mul):
        return _canon_mul_text(e) if e.canonical else _raw_mul_text(e)
    if isinstance(e, Div):
        num = to_text(e.num)
        if _prec(e.num) < _PROD:
            num = _wrap(num)
        den = to_text(e.den)
        if _prec(e.den) < _POW or _leading_minus(e.den):
            den = _wrap(den)
        return f"{num}/{den}"
    if isinstance(e, Neg):
        inner = to_text(e.arg)
        if _prec(e.arg) < _PROD or _leading_minus(e.arg):
            inner = _wrap(inner)
        return "-" + inner
    if isinstance(e, Pow):
        return _pow_text(e.base, e.exp)
    raise TypeError(type(e).__name__)  # pragma: no cover


def _pow_text(base: Expr, exp: Expr) -> str:
    b = to_text(base)
    if _prec(base) < _ATOM or _leading_minus(base) or (isinstance(base, Const) and "." in b):
        b = _wrap(b)
    x = to_text(exp)
    if _prec(exp) < _ATOM or _leading_minus(exp):
        x = _wrap(x)
    return f"{b}^{x}"


def _add_text(e: Add) -> str:
    parts: list[str] = []
    for i, term in enumerate(e.args):
        if i == 0:
            s = to_text(term)
            parts.append(_wrap(s) if _prec(term) < _PROD else s)
            continue
        if isinstance(term, Neg):
            inner = to_text(term.arg)
            if _prec(term.arg) < _PROD or _leading_minus(term.arg):
                inner = _wrap(inner)
            parts.append(" - " + inner)
        elif term.canonical and _leading_minus(term):
            parts.append(" - " + to_text(_negate_canonical(term)))
        else:
            s = to_text(term)
            if _prec(term) < _PROD or _leading_minus(term):
                s = _wrap(s)
            parts.append(" + " + s)
    return "".join(parts)


def _negate_canonical(term: Expr) -> Expr:
    if isinstance(term, Const):
        return Const(-term.value)
    assert isinstance(term, Mul) and isinstance(term.args[0], Const)
    c = -term.args[0].value
    rest = term.args[1:]
    if c == 1:
        return rest[0] if len(rest) == 1 else Mul(rest, canonical=True)
    return Mul((Const(c),) + rest, canonical=True)


def _raw_mul_text(e: Mul) -> str:
    parts = []
    for i, f in enumerate(e.args):
        s = to_text(f)
        if _prec(f) < _PROD or (i > 0 and (_leading_minus(f) or isinstance(f, Div)
                                           or (isinstance(f, Const) and f.value.denominator != 1))):
            s = _wrap(s)
        parts.append(s)
    return "*".join(parts)


def _canon_mul_text(e: Mul) -> str:
    coeff = Fraction(1)
    num: list[str] = []
    den: list[str] = []
    for f in e.args:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Pow) and isinstance(f.exp, Const) and f.exp.value < 0:
            inv = -f.exp.value
            den.append(to_text(f.base) if inv == 1 and _prec(f.base) >= _POW
                       and not _leading_minus(f.base) else
                       (_wrap(to_text(f.base)) if inv == 1 else _pow_text(f.base, Const(inv))))
        else:
            s = to_text(f)
            if _prec(f) < _POW and not isinstance(f, Func):
                s = _wrap(s)
            num.append(s)
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    if coeff.numerator != 1 or not num:
        num.insert(0, str(coeff.numerator))
    if coeff.denominator != 1:
        den.insert(0, str(coeff.denominator))
    text = sign + "*".join(num)
    if den:
        d = "*".join(den)
        text += "/" + (_wrap(d) if len(den) > 1 else d)
    return text
