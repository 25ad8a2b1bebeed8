"""Expression tree nodes and the canonicalising constructors.

Two kinds of trees coexist. *Raw* trees come straight out of the parser and
keep the shape of the input text (``Neg`` and ``Div`` nodes, unflattened
parentheses). *Canonical* trees are produced by :func:`add`, :func:`mul`,
:func:`power` and :func:`func`; they are flattened, sorted, free of zero
summands and unit factors, and products are expanded over sums. ``simplify``
maps a raw tree onto its canonical form and is idempotent.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable

# Positive by construction in every setting this package evaluates in. Power
# rules that are only valid for positive bases consult this set.
POSITIVE_SYMBOLS = frozenset({"t", "x", "zeta", "omega", "s", "alpha", "beta"})

VARIABLES = frozenset(
    {"t", "x", "u", "zeta", "omega", "s", "z", "Psi", "Phi", "W", "Theta",
     "u_T", "u_X", "u_XX", "u_XXX"}
)
PARAMETERS = frozenset(
    {"alpha", "beta", "a", "b", "gamma", "mu", "sigma", "epsilon", "p",
     "c1", "c2", "c3", "c4", "c5"}
)
FUNCTIONS = frozenset({"sin", "cos", "exp", "log", "sqrt"})

_JET_RE = re.compile(r"^u_(x*)(t*)$")
_ODE_JET_RE = re.compile(r"^(Psi|Phi|W|Theta)_([1-9])$")

# Largest integer power of a sum that gets expanded.
MAX_EXPAND = 8


def is_known_name(name: str) -> bool:
    if name in VARIABLES or name in PARAMETERS:
        return True
    m = _JET_RE.match(name)
    if m and (m.group(1) or m.group(2)):
        return True
    return bool(_ODE_JET_RE.match(name))


def is_parameter(name: str) -> bool:
    return name in PARAMETERS


def jet_name(nx: int, nt: int) -> str:
    """Name of the jet coordinate for the (nx, nt) mixed partial of u."""
    if nx == 0 and nt == 0:
        return "u"
    return "u_" + "x" * nx + "t" * nt


def jet_orders(name: str) -> tuple[int, int] | None:
    if name == "u":
        return (0, 0)
    m = _JET_RE.match(name)
    if not m or not (m.group(1) or m.group(2)):
        return None
    return len(m.group(1)), len(m.group(2))


class Expr:
    """Immutable expression node. Subclasses fix the arity."""

    __slots__ = ("_hash", "_key", "canonical")
    kind = "expr"

    def _init(self, canonical: bool) -> None:
        self._hash = None
        self._key = None
        self.canonical = canonical

    # structural identity -------------------------------------------------
    def _payload(self) -> tuple:
        raise NotImplementedError

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.kind, self._payload()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr):
            if isinstance(other, (int, Fraction)):
                return isinstance(self, Const) and self.value == other
            return NotImplemented
        return (self.kind == other.kind and hash(self) == hash(other)
                and self._payload() == other._payload())

    def sort_key(self) -> tuple:
        if self._key is None:
            self._key = _sort_key(self)
        return self._key

    def __repr__(self) -> str:
        from .printer import to_text
        return f"Expr({to_text(self)!r})"

    def __str__(self) -> str:
        from .printer import to_text
        return to_text(self)

    # arithmetic builds canonical trees -----------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(MINUS_ONE, as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(MINUS_ONE, self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return mul(MINUS_ONE, self)


class Const(Expr):
    __slots__ = ("value", "text")
    kind = "const"

    def __init__(self, value, text: str | None = None):
        self._init(True)
        self.value = Fraction(value)
        self.text = text

    def _payload(self):
        return (self.value,)


class Sym(Expr):
    __slots__ = ("name",)
    kind = "sym"

    def __init__(self, name: str):
        self._init(True)
        self.name = name

    def _payload(self):
        return (self.name,)

    @property
    def is_parameter(self) -> bool:
        return self.name in PARAMETERS


class Add(Expr):
    __slots__ = ("args",)
    kind = "add"

    def __init__(self, args: Iterable[Expr], canonical: bool = False):
        self._init(canonical)
        self.args = tuple(args)

    def _payload(self):
        return self.args

    @property
    def children(self):
        return self.args


class Mul(Expr):
    __slots__ = ("args",)
    kind = "mul"

    def __init__(self, args: Iterable[Expr], canonical: bool = False):
        self._init(canonical)
        self.args = tuple(args)

    def _payload(self):
        return self.args

    @property
    def children(self):
        return self.args


class Div(Expr):
    __slots__ = ("num", "den")
    kind = "div"

    def __init__(self, num: Expr, den: Expr):
        self._init(False)
        self.num = num
        self.den = den

    def _payload(self):
        return (self.num, self.den)

    @property
    def children(self):
        return (self.num, self.den)


class Neg(Expr):
    __slots__ = ("arg",)
    kind = "neg"

    def __init__(self, arg: Expr):
        self._init(False)
        self.arg = arg

    def _payload(self):
        return (self.arg,)

    @property
    def children(self):
        return (self.arg,)


class Pow(Expr):
    __slots__ = ("base", "exp")
    kind = "pow"

    def __init__(self, base: Expr, exp: Expr, canonical: bool = False):
        self._init(canonical)
        self.base = base
        self.exp = exp

    def _payload(self):
        return (self.base, self.exp)

    @property
    def children(self):
        return (self.base, self.exp)


class Func(Expr):
    __slots__ = ("name", "arg")
    kind = "func"

    def __init__(self, name: str, arg: Expr, canonical: bool = False):
        self._init(canonical)
        self.name = name
        self.arg = arg

    def _payload(self):
        return (self.name, self.arg)

    @property
    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
HALF = Const(Fraction(1, 2))

_RANK = {"const": 0, "sym": 1, "pow": 2, "func": 3, "mul": 4, "add": 5,
         "neg": 6, "div": 7}


def _sort_key(e: Expr) -> tuple:
    if isinstance(e, Const):
        return (0, e.value)
    if isinstance(e, Sym):
        return (1, e.name)
    if isinstance(e, Func):
        return (3, e.name, e.arg.sort_key())
    if isinstance(e, Pow):
        return (2, e.base.sort_key(), e.exp.sort_key())
    return (_RANK[e.kind], tuple(c.sort_key() for c in e.children))


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError(f"non-finite constant {v!r}")
        return Const(Fraction(v).limit_denominator(10**12)
                     if v == float(Fraction(v).limit_denominator(10**12))
                     else Fraction(v))
    if isinstance(v, str):
        if not is_known_name(v):
            raise ValueError(f"unknown identifier {v!r}")
        return Sym(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def sym(name: str) -> Sym:
    if not is_known_name(name):
        raise ValueError(f"unknown identifier {name!r}")
    return Sym(name)


def symbols(names: str) -> tuple[Sym, ...]:
    return tuple(sym(n) for n in names.replace(",", " ").split())


# ---------------------------------------------------------------------------
# canonical constructors


def _canon(e: Expr) -> Expr:
    if e.canonical:
        return e
    from .simplify import simplify
    return simplify(e)


def _split_coeff(term: Expr) -> tuple[Fraction, Expr]:
    if isinstance(term, Const):
        return term.value, ONE
    if isinstance(term, Mul) and isinstance(term.args[0], Const):
        rest = term.args[1:]
        if len(rest) == 1:
            return term.args[0].value, rest[0]
        return term.args[0].value, Mul(rest, canonical=True)
    return Fraction(1), term


def _with_coeff(c: Fraction, rest: Expr) -> Expr:
    if rest == ONE:
        return Const(c)
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.args, canonical=True)
    return Mul((Const(c), rest), canonical=True)


def add(*terms: Expr) -> Expr:
    coeffs: dict[Expr, Fraction] = {}
    order: list[Expr] = []
    stack = [_canon(as_expr(t)) for t in terms]
    flat: list[Expr] = []
    for t in stack:
        if isinstance(t, Add):
            flat.extend(t.args)
        else:
            flat.append(t)
    for t in flat:
        c, rest = _split_coeff(t)
        if c == 0:
            continue
        if rest in coeffs:
            coeffs[rest] += c
        else:
            coeffs[rest] = c
            order.append(rest)
    out = [_with_coeff(coeffs[r], r) for r in order if coeffs[r] != 0]
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=Expr.sort_key)
    return Add(out, canonical=True)


def is_positive(e: Expr) -> bool:
    """Conservative sign test: True only when e > 0 wherever it is defined."""
    if isinstance(e, Const):
        return e.value > 0
    if isinstance(e, Sym):
        return e.name in POSITIVE_SYMBOLS
    if isinstance(e, Pow):
        return is_positive(e.base)
    if isinstance(e, (Mul, Add)):
        return all(is_positive(a) for a in e.args)
    if isinstance(e, Func):
        return e.name == "exp" or (e.name == "sqrt" and is_positive(e.arg))
    return False


def _is_int_const(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.denominator == 1


# exact rational powers are kept only while the result stays this small
MAX_EXACT_BITS = 4096
MAX_ROOT_DEGREE = 64


def _bits(v: Fraction) -> int:
    return max(v.numerator.bit_length(), v.denominator.bit_length(), 1)


def _exact_root(v: Fraction, q: int) -> Fraction | None:
    """Exact q-th root of a non-negative rational, or None."""
    if q > MAX_ROOT_DEGREE or _bits(v) > 1000:
        return None

    def iroot(n: int) -> int | None:
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand ** q == n:
                return cand
        return None
    if v < 0:
        return None
    n, d = iroot(v.numerator), iroot(v.denominator)
    if n is None or d is None:
        return None
    return Fraction(n, d)


def power(base: Expr, exp: Expr) -> Expr:
    base = _canon(as_expr(base))
    exp = _canon(as_expr(exp))
    if exp == ZERO:
        return ONE
    if exp == ONE:
        return base
    if base == ONE:
        return ONE
    if isinstance(base, Const):
        if base.value == 0:
            if isinstance(exp, Const) and exp.value > 0:
                return ZERO
            return Pow(base, exp, canonical=True)
        if isinstance(exp, Const):
            ev = exp.value
            if ev.denominator == 1:
                if _bits(base.value) * abs(ev.numerator) <= MAX_EXACT_BITS:
                    return Const(base.value ** int(ev))
                return Pow(base, exp, canonical=True)
            root = _exact_root(abs(base.value), ev.denominator)
            if (root is not None and base.value > 0
                    and _bits(root) * abs(ev.numerator) <= MAX_EXACT_BITS):
                return Const(root ** ev.numerator)
        return Pow(base, exp, canonical=True)
    if isinstance(base, Pow):
        if _is_int_const(exp) or is_positive(base.base):
            return power(base.base, mul(base.exp, exp))
        return Pow(base, exp, canonical=True)
    if isinstance(base, Mul):
        if _is_int_const(exp) or all(is_positive(f) for f in base.args):
            return mul(*(power(f, exp) for f in base.args))
        # pull out the positive part only
        pos = [f for f in base.args if is_positive(f)]
        if pos:
            rest = [f for f in base.args if not is_positive(f)]
            return mul(*(power(f, exp) for f in pos),
                       Pow(mul(*rest), exp, canonical=True))
        return Pow(base, exp, canonical=True)
    if isinstance(base, Add) and _is_int_const(exp) and 1 < exp.value <= MAX_EXPAND:
        out: Expr = base
        for _ in range(int(exp.value) - 1):
            out = add(*(mul(p, q) for p in _terms(out) for q in base.args))
        return out
    if isinstance(base, Func) and base.name == "exp":
        return func("exp", mul(base.arg, exp))
    return Pow(base, exp, canonical=True)


def _terms(e: Expr) -> tuple[Expr, ...]:
    return e.args if isinstance(e, Add) else (e,)


def _base_exp(f: Expr) -> tuple[Expr, Expr]:
    if isinstance(f, Pow):
        return f.base, f.exp
    return f, ONE


def mul(*factors: Expr, expand: bool = True) -> Expr:
    pending = [_canon(as_expr(f)) for f in factors]
    for _ in range(64):
        coeff = Fraction(1)
        exps: dict[Expr, list[Expr]] = {}
        order: list[Expr] = []
        flat: list[Expr] = []
        for f in pending:
            if isinstance(f, Mul):
                flat.extend(f.args)
            else:
                flat.append(f)
        for f in flat:
            if isinstance(f, Const):
                coeff *= f.value
                continue
            b, e = _base_exp(f)
            if b in exps:
                exps[b].append(e)
            else:
                exps[b] = [e]
                order.append(b)
        if coeff == 0:
            return ZERO
        results = []
        for b in order:
            es = exps[b]
            if len(es) == 1:
                results.append(b if es[0] == ONE else power(b, es[0]))
            else:
                results.append(power(b, add(*es)))
        unstable = any(isinstance(r, (Const, Mul)) for r in results)
        if unstable:
            pending = [Const(coeff)] + results
            continue
        break
    else:  # pragma: no cover - guards against rewrite cycles
        raise RuntimeError("mul did not reach a fixed point")

    if expand:
        for i, r in enumerate(results):
            if isinstance(r, Add):
                others = results[:i] + results[i + 1:]
                return add(*(mul(Const(coeff), *others, term) for term in r.args))
    if not results:
        return Const(coeff)
    results.sort(key=Expr.sort_key)
    if coeff == 1 and len(results) == 1:
        return results[0]
    if coeff == 1:
        return Mul(results, canonical=True)
    return Mul([Const(coeff)] + results, canonical=True)


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = _canon(as_expr(arg))
    if name == "sqrt":
        return power(arg, HALF)
    if name == "exp" and arg == ZERO:
        return ONE
    if name == "log":
        if arg == ONE:
            return ZERO
        if isinstance(arg, Func) and arg.name == "exp":
            return arg.arg
    if name in ("sin",) and arg == ZERO:
        return ZERO
    if name == "cos" and arg == ZERO:
        return ONE
    return Func(name, arg, canonical=True)


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, power(b, MINUS_ONE))


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))
