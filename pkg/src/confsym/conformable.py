"""Conformable fractional derivative and integral, symbolic and numeric.

The conformable derivative of order ``alpha`` is the limit of
``(f(t + eps*t**(1-alpha)) - f(t)) / eps``; for differentiable ``f`` it equals
``t**(1-alpha) * f'(t)``. The matching integral is
``I^alpha f(t) = int_0^t f(tau) * tau**(alpha-1) dtau``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .expr import (ONE, Expr, add, as_expr, compile_expr, diff, mul, power,
                   simplify, substitute, sym)


class ConformableDomainError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(f"{message} (value {value:.6g}, error estimate {error_estimate:.3g})")
        self.value = value
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class ConfCalcConfig:
    eps0: float = 1e-6
    richardson_levels: int = 2
    quad_abs_tol: float = 1e-10
    quad_rel_tol: float = 1e-8

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("eps0 must be positive")
        if self.richardson_levels < 0:
            raise ValueError("richardson_levels must be non-negative")
        if not (self.quad_abs_tol > 0 and self.quad_rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")


DEFAULT_CONFIG = ConfCalcConfig()


def conf_diff_symbolic(e: Expr, v: str = "t", order=None) -> Expr:
    """``v**(1-order) * d e/d v``, simplified. ``order`` defaults to alpha."""
    order = sym("alpha") if order is None else as_expr(order)
    var = sym(v)
    return simplify(mul(power(var, add(ONE, -order)), diff(e, v)))


def _check_point(t: float, alpha: float) -> None:
    if not t > 0:
        raise ConformableDomainError(f"conformable derivative needs t > 0, got {t!r}")
    if not 0 < alpha <= 1:
        raise ConformableDomainError(f"order must lie in (0, 1], got {alpha!r}")


def conf_diff_numeric(f: Callable[[float], float], t: float, alpha: float,
                      cfg: ConfCalcConfig = DEFAULT_CONFIG) -> float:
    """Limit-definition quotient with Richardson extrapolation in eps.

    If ``f`` exposes ``difference(t, h)`` returning ``f(t+h) - f(t)`` it is
    used in place of subtracting two evaluations.
    """
    _check_point(t, alpha)
    scale = t ** (1.0 - alpha)
    f0 = None
    difference = getattr(f, "difference", None)

    def quotient(eps: float) -> float:
        nonlocal f0
        h = eps * scale
        if difference is not None:
            return float(difference(t, h)) / eps
        if f0 is None:
            f0 = float(f(t))
        return (float(f(t + h)) - f0) / eps

    levels = cfg.richardson_levels
    table = [[quotient(cfg.eps0 / 2 ** k)] for k in range(levels + 1)]
    # forward differences carry an error series in integer powers of eps
    for k in range(1, levels + 1):
        for j in range(1, k + 1):
            w = 2.0 ** j
            table[k].append((w * table[k][j - 1] - table[k - 1][j - 1]) / (w - 1.0))
    out = table[levels][levels]
    if not math.isfinite(out):
        raise ConformableDomainError(f"non-finite derivative estimate at t={t!r}")
    return out


def _quad(g: Callable[[float], float], lo: float, hi: float, cfg: ConfCalcConfig) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err, info = integrate.quad(g, lo, hi, epsabs=cfg.quad_abs_tol,
                                        epsrel=cfg.quad_rel_tol, limit=200,
                                        full_output=True)[:3]
    if not math.isfinite(val) or err > max(cfg.quad_abs_tol, cfg.quad_rel_tol * abs(val)):
        raise QuadratureError("quadrature did not reach tolerance", val, err)
    return val


def conf_integrate_numeric(f: Callable[[float], float], t: float, alpha: float,
                           cfg: ConfCalcConfig = DEFAULT_CONFIG) -> float:
    """``int_0^t f(tau) tau**(alpha-1) dtau`` via tau = sigma**(1/alpha)."""
    _check_point(t, alpha)
    inv = 1.0 / alpha
    # the substitution turns the weight into the constant 1/alpha
    return _quad(lambda sig: inv * float(f(sig ** inv)), 0.0, t ** alpha, cfg)


class ConformableIntegral:
    """``t -> I^alpha f(t)`` as a callable with an exact-increment hook."""

    def __init__(self, f: Callable[[float], float], alpha: float,
                 cfg: ConfCalcConfig = DEFAULT_CONFIG):
        self.f = f
        self.alpha = alpha
        self.cfg = cfg

    def __call__(self, t: float) -> float:
        return conf_integrate_numeric(self.f, t, self.alpha, self.cfg)

    def difference(self, t: float, h: float) -> float:
        a1 = self.alpha - 1.0
        return _quad(lambda tau: float(self.f(tau)) * tau ** a1, t, t + h, self.cfg)


# ---------------------------------------------------------------------------
# rule verification


@dataclass(frozen=True)
class CorpusFunction:
    name: str
    expr: Expr

    @property
    def fn(self) -> Callable[[float], float]:
        return _scalar_fn(self.expr)

    @property
    def dfn(self) -> Callable[[float], float]:
        return _scalar_fn(diff(self.expr, "t"))


def _scalar_fn(e: Expr) -> Callable[[float], float]:
    c = compile_expr(e)

    def fn(t: float) -> float:
        return float(c({"t": t}))

    return fn


def default_corpus() -> list[CorpusFunction]:
    from .expr import E
    texts = {
        "sin": "sin(t)", "exp": "exp(t)", "cos": "cos(t)",
        "pow52": "t^(5/2)", "log1p": "log(1 + t)", "lorentz": "1/(1 + t^2)",
    }
    return [CorpusFunction(k, E(v)) for k, v in texts.items()]


# (outer, inner) compositions whose values stay O(1) to O(10) on the default
# points, so an absolute residual of 1e-6 is meaningful in double precision
_CHAIN_PAIRS = (("exp", "sin"), ("exp", "cos"), ("sin", "log1p"), ("cos", "lorentz"),
                ("pow52", "log1p"), ("log1p", "pow52"), ("log1p", "exp"),
                ("lorentz", "exp"), ("lorentz", "sin"), ("pow52", "lorentz"))


def default_chain_pairs() -> list[tuple[CorpusFunction, CorpusFunction]]:
    by_name = {c.name: c for c in default_corpus()}
    return [(by_name[f], by_name[g]) for f, g in _CHAIN_PAIRS]


def default_points(n: int = 20) -> list[float]:
    return [float(v) for v in np.linspace(0.25, 3.0, n)]


@dataclass
class RuleReport:
    rule: str
    alpha: float
    max_residual: float
    points_checked: int
    skipped: int = 0
    tol: float = 1e-6
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.points_checked > 0 and self.max_residual < self.tol

    def to_json(self) -> dict:
        return {"rule": self.rule, "alpha": self.alpha,
                "max_residual": self.max_residual,
                "points_checked": self.points_checked,
                "skipped": self.skipped, "pass": self.passed}


class _Accumulator:
    def __init__(self, rule: str, alpha: float, tol: float):
        self.report = RuleReport(rule, alpha, 0.0, 0, tol=tol)

    def add(self, lhs: float, rhs: float) -> None:
        r = abs(lhs - rhs)
        if not math.isfinite(r):
            r = math.inf
        self.report.max_residual = max(self.report.max_residual, r)
        self.report.points_checked += 1

    def skip(self, why: str) -> None:
        self.report.skipped += 1
        if why not in self.report.notes:
            self.report.notes.append(why)


RULES = ("linearity", "power", "constant", "product", "quotient", "classical",
         "inverse_DI", "inverse_ID", "chain_derivative", "chain_conformable")

LINEAR_WEIGHTS = (2.5, -1.5)
POWER_EXPONENTS = (-1.5, 0.5, 2.0, 3.7)


def check_rules(alpha: float, corpus: Sequence[CorpusFunction] | None = None,
                points: Iterable[float] | None = None,
                cfg: ConfCalcConfig = DEFAULT_CONFIG, tol: float = 1e-6,
                rules: Sequence[str] = RULES,
                chain_pairs: Sequence[tuple[CorpusFunction, CorpusFunction]] | None = None,
                ) -> list[RuleReport]:
    """Check the conformable calculus rules numerically at ``alpha``.

    Every derivative on both sides goes through ``conf_diff_numeric``; the
    classical derivative enters only where a rule states it. Pairs that
    violate a rule's hypothesis (a zero denominator, ``g(t) <= 0`` for the
    conformable chain rule, an undefined composite) are skipped and counted.
    The chain rules run over ``chain_pairs`` of (outer, inner) functions.
    """
    corpus = list(corpus) if corpus is not None else default_corpus()
    chain = list(chain_pairs) if chain_pairs is not None else default_chain_pairs()
    pts = [float(p) for p in (points if points is not None else default_points())]
    for p in pts:
        if p < 0.05:
            raise ConformableDomainError("rule checks are restricted to t >= 0.05")

    def D(fn, t):
        return conf_diff_numeric(fn, t, alpha, cfg)

    fns = [(c.name, c.fn, c.dfn, c.expr) for c in corpus]
    pairs = [(a, b) for i, a in enumerate(fns) for b in fns[i + 1:]]
    out: list[RuleReport] = []
    for rule in rules:
        acc = _Accumulator(rule, alpha, tol)
        if rule == "linearity":
            ca, cb = LINEAR_WEIGHTS
            for (_, f, _, _), (_, g, _, _) in pairs:
                comb = lambda s, f=f, g=g: ca * f(s) + cb * g(s)  # noqa: E731
                for t in pts:
                    acc.add(D(comb, t), ca * D(f, t) + cb * D(g, t))
        elif rule == "power":
            for p in POWER_EXPONENTS:
                for t in pts:
                    acc.add(D(lambda s, p=p: s ** p, t), p * t ** (p - alpha))
        elif rule == "constant":
            for c in (-3.0, 0.0, 7.25):
                for t in pts:
                    acc.add(D(lambda s, c=c: c, t), 0.0)
        elif rule == "product":
            for (_, f, _, _), (_, g, _, _) in pairs:
                for t in pts:
                    acc.add(D(lambda s, f=f, g=g: f(s) * g(s), t),
                            f(t) * D(g, t) + g(t) * D(f, t))
        elif rule == "quotient":
            for (_, f, _, _), (gname, g, _, _) in pairs + [(fns[0], ("one", lambda s: 1.0, None, None))]:
                for t in pts:
                    gt = g(t)
                    if abs(gt) < 1e-8:
                        acc.skip(f"{gname} vanishes")
                        continue
                    acc.add(D(lambda s, f=f, g=g: f(s) / g(s), t),
                            (gt * D(f, t) - f(t) * D(g, t)) / gt ** 2)
        elif rule == "classical":
            for _, f, df, _ in fns:
                for t in pts:
                    acc.add(D(f, t), t ** (1 - alpha) * df(t))
        elif rule == "inverse_DI":
            for _, f, _, _ in fns:
                F = ConformableIntegral(f, alpha, cfg)
                for t in pts:
                    acc.add(D(F, t), f(t))
        elif rule == "inverse_ID":
            for _, f, _, _ in fns:
                Df = lambda s, f=f: D(f, s)  # noqa: E731
                f0 = f(0.0)
                for t in pts:
                    acc.add(conf_integrate_numeric(Df, t, alpha, cfg), f(t) - f0)
        elif rule in ("chain_derivative", "chain_conformable"):
            for outer, inner in chain:
                comp = compile_expr(substitute(outer.expr, {"t": inner.expr}))
                fprime, fouter, g = outer.dfn, outer.fn, inner.fn
                comp_fn = lambda s, comp=comp: _finite(comp({"t": s}))  # noqa: E731
                for t in pts:
                    gt = g(t)
                    if rule == "chain_conformable" and gt <= 0:
                        acc.skip(f"{inner.name}(t) <= 0")
                        continue
                    try:
                        lhs = D(comp_fn, t)
                        if rule == "chain_derivative":
                            rhs = _finite(fprime(gt)) * D(g, t)
                        else:
                            rhs = D(fouter, gt) * D(g, t) * gt ** (alpha - 1)
                    except (ConformableDomainError, ValueError, ArithmeticError):
                        acc.skip(f"{outer.name} undefined near {inner.name}(t)")
                        continue
                    acc.add(lhs, rhs)
        else:
            raise ValueError(f"unknown rule {rule!r}")
        out.append(acc.report)
    return out


def _finite(v) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise ConformableDomainError("function undefined at this point")
    return v


def worked_example(points: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
                   cfg: ConfCalcConfig = DEFAULT_CONFIG) -> dict:
    """``D^(1/2) sqrt(t)`` is the constant 1/2."""
    vals = [conf_diff_numeric(math.sqrt, t, 0.5, cfg) for t in points]
    err = max(abs(v - 0.5) for v in vals)
    return {"alpha": 0.5, "function": "sqrt(t)", "expected": 0.5,
            "points": list(points), "abs_error": err}


def rule_reports_json(reports: Sequence[RuleReport]) -> list[dict]:
    return [r.to_json() for r in reports]


__all__ = [
    "worked_example", "ConfCalcConfig", "ConformableDomainError", "ConformableIntegral", "CorpusFunction",
    "DEFAULT_CONFIG", "QuadratureError", "RULES", "RuleReport", "check_rules",
    "conf_diff_numeric", "conf_diff_symbolic", "conf_integrate_numeric",
    "default_chain_pairs", "default_corpus", "default_points", "rule_reports_json",
]
