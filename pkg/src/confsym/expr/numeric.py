"""Numeric evaluation: a checked scalar evaluator, a vectorised compiler and
the sampling zero-test used wherever symbolic cancellation is incomplete."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .calculus import free_symbols
from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Sym, ZERO
from .printer import to_text
from .simplify import simplify

ZERO_TEST_SEED = 0xC0FFEE
ZERO_TEST_SAMPLES = 100
ZERO_TEST_TOL = 1e-9


class EvalError(ArithmeticError):
    pass


class UnboundSymbolError(EvalError, KeyError):
    def __init__(self, name: str):
        super().__init__(f"unbound symbol {name!r}")
        self.name = name

    def __str__(self) -> str:
        return self.args[0]


class EvalDomainError(EvalError, ValueError):
    def __init__(self, message: str, subexpr: Expr):
        super().__init__(f"{message} in {to_text(subexpr)!r}")
        self.subexpr = subexpr


_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
}


def evaluate(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate to a finite float; errors name the offending subexpression."""
    return _eval(e, env, {})


def _eval(e: Expr, env: Mapping[str, float], memo: dict[int, float]) -> float:
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = float(e.value)
    elif isinstance(e, Sym):
        if e.name not in env:
            raise UnboundSymbolError(e.name)
        out = float(env[e.name])
        if not math.isfinite(out):
            raise EvalDomainError("non-finite binding", e)
    elif isinstance(e, Add):
        out = math.fsum(_eval(a, env, memo) for a in e.args)
    elif isinstance(e, Mul):
        out = 1.0
        for a in e.args:
            out *= _eval(a, env, memo)
    elif isinstance(e, Neg):
        out = -_eval(e.arg, env, memo)
    elif isinstance(e, Div):
        den = _eval(e.den, env, memo)
        if den == 0.0:
            raise EvalDomainError("division by zero", e)
        out = _eval(e.num, env, memo) / den
    elif isinstance(e, Pow):
        b = _eval(e.base, env, memo)
        x = _eval(e.exp, env, memo)
        if b == 0.0 and x < 0:
            raise EvalDomainError("division by zero", e)
        if b < 0 and not float(x).is_integer():
            raise EvalDomainError("negative base with non-integer exponent", e)
        try:
            out = b ** x
        except OverflowError as exc:
            raise EvalDomainError("overflow", e) from exc
    elif isinstance(e, Func):
        a = _eval(e.arg, env, memo)
        if e.name == "log" and a <= 0:
            raise EvalDomainError("log of non-positive value", e)
        if e.name == "sqrt" and a < 0:
            raise EvalDomainError("sqrt of negative value", e)
        try:
            out = _FUNCS[e.name](a)
        except OverflowError as exc:
            raise EvalDomainError("overflow", e) from exc
    else:  # pragma: no cover
        raise TypeError(type(e).__name__)
    if not math.isfinite(out):
        raise EvalDomainError("non-finite value", e)
    memo[id(e)] = out
    return out


# ---------------------------------------------------------------------------
# vectorised compilation


@dataclass(frozen=True)
class Compiled:
    """A numpy-vectorised evaluator for one expression."""

    expr: Expr
    names: tuple[str, ...]
    source: str
    _fn: Callable

    def __call__(self, env: Mapping[str, object]) -> np.ndarray:
        missing = [n for n in self.names if n not in env]
        if missing:
            raise UnboundSymbolError(missing[0])
        with np.errstate(all="ignore"):
            return self._fn(env)


def compile_expr(e: Expr, with_scale: bool = False) -> Compiled:
    """Compile ``e`` to a numpy function of a name->array mapping.

    Common subexpressions are evaluated once. With ``with_scale`` the function
    returns ``(value, scale)`` where scale is the sum of absolute values of the
    top-level summands, a natural magnitude for cancellation checks.
    """
    e = simplify(e)
    names = tuple(sorted(free_symbols(e)))
    lines: list[str] = []
    cache: dict[Expr, str] = {}

    def emit(n: Expr) -> str:
        got = cache.get(n)
        if got is not None:
            return got
        if isinstance(n, Const):
            ref = repr(float(n.value))
            cache[n] = ref
            return ref
        if isinstance(n, Sym):
            ref = cache[n]
            return ref
        if isinstance(n, Add):
            code = " + ".join(emit(a) for a in n.args)
        elif isinstance(n, Mul):
            code = " * ".join(emit(a) for a in n.args)
        elif isinstance(n, Neg):
            code = f"-({emit(n.arg)})"
        elif isinstance(n, Div):
            code = f"({emit(n.num)}) / ({emit(n.den)})"
        elif isinstance(n, Pow):
            b = emit(n.base)
            if isinstance(n.exp, Const) and n.exp.value.denominator == 1:
                k = int(n.exp.value)
                code = f"_reciprocal({b}) ** {-k}" if k < 0 else f"{b} ** {k}"
            elif isinstance(n.exp, Const) and n.exp.value == Const(1).value / 2:
                code = f"_np.sqrt({b})"
            else:
                code = f"_np.power({b}, {emit(n.exp)})"
        elif isinstance(n, Func):
            code = f"_np.{n.name}({emit(n.arg)})"
        else:  # pragma: no cover
            raise TypeError(type(n).__name__)
        ref = f"_t{len(lines)}"
        lines.append(f"    {ref} = {code}")
        cache[n] = ref
        return ref

    for i, name in enumerate(names):
        ref = f"_s{i}"
        lines.append(f"    {ref} = _asarray(env[{name!r}])")
        cache[Sym(name)] = ref
    out = emit(e)
    if with_scale:
        terms = e.args if isinstance(e, Add) else (e,)
        scale = " + ".join(f"_np.abs({emit(t)})" for t in terms)
        lines.append(f"    return {out} + _zero, {scale} + _zero")
    else:
        lines.append(f"    return {out} + _zero")
    src = "def _compiled(env):\n" + "\n".join(lines) + "\n"
    ns = {"_np": np, "_asarray": _asarray, "_reciprocal": _reciprocal, "_zero": np.float64(0.0)}
    exec(compile(src, f"<compiled {len(lines)} lines>", "exec"), ns)
    return Compiled(e, names, src, ns["_compiled"])


def _asarray(v):
    return np.asarray(v, dtype=float)


def _reciprocal(v):
    return 1.0 / v


# ---------------------------------------------------------------------------
# sampling


_RANGES: dict[str, tuple[float, float]] = {
    "t": (0.2, 3.0), "x": (0.2, 3.0), "zeta": (0.2, 3.0), "omega": (0.2, 3.0),
    "s": (0.2, 3.0), "z": (-2.0, 2.0),
    "alpha": (0.2, 1.0), "beta": (0.2, 1.0),
    "a": (0.5, 2.0), "b": (0.5, 2.0), "gamma": (0.5, 2.0), "mu": (0.5, 2.0),
    "sigma": (-1.0, 1.0), "epsilon": (-0.5, 0.5), "p": (-2.0, 2.0),
}


def sample_range(name: str) -> tuple[float, float]:
    """Sampling interval used by the zero-test for a symbol."""
    if name in _RANGES:
        return _RANGES[name]
    # u, jet coordinates, ODE unknowns and their derivatives, c1..c5
    return (-2.0, 2.0)


def random_env(names, n: int, rng: np.random.Generator,
               fixed: Mapping[str, float] | None = None) -> dict[str, np.ndarray]:
    fixed = dict(fixed or {})
    env: dict[str, np.ndarray] = {}
    for name in sorted(names):
        if name in fixed:
            env[name] = np.full(n, float(fixed[name]))
        else:
            lo, hi = sample_range(name)
            env[name] = rng.uniform(lo, hi, n)
    return env


@dataclass(frozen=True)
class ZeroTestResult:
    zero: bool
    symbolic: bool
    max_abs: float
    samples: int

    def __bool__(self) -> bool:
        return self.zero


def zero_test(e: Expr, fixed: Mapping[str, float] | None = None, *,
              n: int = ZERO_TEST_SAMPLES, seed: int = ZERO_TEST_SEED,
              tol: float = ZERO_TEST_TOL, relative: bool = False) -> ZeroTestResult:
    """Decide ``e == 0``: literal zero after simplification, or numerically
    below ``tol`` at ``n`` seeded random points.

    Symbols bound in ``fixed`` are held at the given values. With
    ``relative`` the tolerance is scaled by ``max(1, sum |summands|)``.
    """
    e = simplify(e)
    if e == ZERO:
        return ZeroTestResult(True, True, 0.0, 0)
    rng = np.random.default_rng(seed)
    fn = compile_expr(e, with_scale=True)
    env = random_env(fn.names, n, rng, fixed)
    val, scale = fn(env)
    val = np.broadcast_to(val, (n,))
    scale = np.broadcast_to(scale, (n,))
    ok = np.isfinite(val) & np.isfinite(scale)
    if not ok.any():
        return ZeroTestResult(False, False, math.inf, 0)
    bound = tol * np.maximum(1.0, scale[ok]) if relative else tol
    absval = np.abs(val[ok])
    return ZeroTestResult(bool(np.all(absval <= bound)), False,
                          float(absval.max()), int(ok.sum()))
