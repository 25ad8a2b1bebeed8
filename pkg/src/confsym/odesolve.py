"""Initial-value integration of the reduced ODEs.

Conformable ODEs are first rewritten in ``s = v**alpha / alpha``, where the
conformable derivative is exactly ``d/ds``. Steps come from scipy's DOP853;
each accepted step carries a quintic Hermite interpolant built from the
state and its first two derivatives, so the dense output is C2 across joints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .expr import (Expr, add, as_expr, compile_expr, diff, free_symbols, mul, power,
                   substitute, sym)
from .odes import CanonicalODE, jet, with_lhs

BLOWUP = 1e8
# the stepper runs this much tighter than the requested tolerance, so the
# interpolant's own derivative (not just its values) honours ``tol``
STEP_MARGIN = 1e-2
# DOP853 refuses relative tolerances below about 100 machine epsilons
MIN_RTOL = 2.5e-14


class IntegrationError(RuntimeError):
    pass


class SpanError(ValueError):
    pass


@dataclass(frozen=True)
class SVariable:
    """Record of the change ``s = v**alpha / alpha`` (identity when classical)."""

    indep: str
    alpha: object  # number, symbolic Expr, or None for classical

    def s_of(self, v):
        if self.alpha is None:
            return np.asarray(v, dtype=float)
        a = float(self.alpha)
        return np.asarray(v, dtype=float) ** a / a

    def v_of(self, s):
        if self.alpha is None:
            return np.asarray(s, dtype=float)
        a = float(self.alpha)
        return (a * np.asarray(s, dtype=float)) ** (1.0 / a)


def s_substitute(ode: CanonicalODE) -> tuple[CanonicalODE, SVariable]:
    """Rewrite a conformable ODE as a classical one in ``s``."""
    if not ode.fractional:
        lhs = substitute(ode.lhs, {ode.indep: sym("s")}) if ode.indep != "s" else ode.lhs
        return with_lhs(ode, lhs, indep="s"), SVariable(ode.indep, None)
    a = as_expr(ode.alpha)
    v_of_s = power(mul(a, sym("s")), power(a, -1))
    lhs = substitute(ode.lhs, {ode.indep: v_of_s})
    alpha = ode.param_map.get("alpha", a)
    return (with_lhs(ode, lhs, indep="s", fractional=False),
            SVariable(ode.indep, alpha))


def classical_derivative(ode: CanonicalODE, e: Expr) -> Expr:
    """``d/ds`` of ``e(s, Y, Y_1, ...)`` for an ODE already in ``s``."""
    terms = [diff(e, ode.indep)]
    names = free_symbols(e)
    for k in range(9):
        n = jet(ode.unknown, k)
        if n in names:
            terms.append(mul(sym(jet(ode.unknown, k + 1)), diff(e, n)))
    return add(*terms)


def on_shell_jets(ode: CanonicalODE, upto: int) -> list[Expr]:
    """Jets ``Y_order .. Y_upto`` as functions of ``(s, Y, .., Y_{order-1})``."""
    top = ode.solved()
    out = [top]
    lower = {ode.top: top}
    cur = top
    for _ in range(ode.order + 1, upto + 1):
        cur = substitute(classical_derivative(ode, cur), lower)
        out.append(cur)
        lower[jet(ode.unknown, ode.order + len(out) - 1)] = cur
    return out


# ---------------------------------------------------------------------------
# quintic Hermite segments

# rows: coefficients of theta^0..theta^5 for data (y0, h y0', h^2 y0'', y1, h y1', h^2 y1'')
_HERMITE = np.array([
    [1, 0, 0, -10, 15, -6],
    [0, 1, 0, -6, 8, -3],
    [0, 0, 0.5, -1.5, 1.5, -0.5],
    [0, 0, 0, 10, -15, 6],
    [0, 0, 0, -4, 7, -3],
    [0, 0, 0, 0.5, -1, 0.5],
], dtype=float)


def _hermite_eval(theta, h, data, m):
    """m-th derivative in s of the quintic with the given endpoint data.

    ``data`` has shape (6, ...) ordered as in ``_HERMITE``.
    """
    coef = np.tensordot(_HERMITE.T, data, axes=(1, 0))  # (6, ...)
    out = np.zeros_like(theta, dtype=float)
    for k in range(m, 6):
        fall = math.prod(range(k - m + 1, k + 1))
        out = out + fall * coef[k] * theta ** (k - m)
    return out / h ** m


class Solution(Protocol):
    span: tuple[float, float]

    def jets(self, s, n: int, mode: str = "ode") -> list[np.ndarray]: ...


@dataclass
class ODESolution:
    """Dense numeric solution of a classical ODE in ``s``.

    ``nodes`` are the accepted step points; ``y, dy, ddy`` hold the state
    ``(Y, .., Y_{order-1})`` and its first two derivatives there.
    """

    ode: CanonicalODE
    svar: SVariable
    nodes: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    ddy: np.ndarray
    s0: float
    ic: tuple
    tol: float
    blowup: bool = False
    notes: list[str] = field(default_factory=list)
    _higher: list = field(default_factory=list, repr=False)

    @property
    def span(self) -> tuple[float, float]:
        return (float(self.nodes[0]), float(self.nodes[-1]))

    def _locate(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo, hi = self.span
        if np.any(s < lo - 1e-12 * max(1.0, abs(lo))) or np.any(s > hi + 1e-12 * max(1.0, abs(hi))):
            bad = s[(s < lo) | (s > hi)][0]
            raise SpanError(f"s = {bad:.6g} outside the solution span [{lo:.6g}, {hi:.6g}]")
        idx = np.clip(np.searchsorted(self.nodes, s, side="right") - 1, 0, len(self.nodes) - 2)
        h = self.nodes[idx + 1] - self.nodes[idx]
        theta = (s - self.nodes[idx]) / h
        return s, idx, h, theta

    def component(self, s, i: int, m: int = 0) -> np.ndarray:
        """m-th derivative of the interpolant of state component ``i``."""
        s, idx, h, theta = self._locate(s)
        data = np.stack([self.y[idx, i], h * self.dy[idx, i], h * h * self.ddy[idx, i],
                         self.y[idx + 1, i], h * self.dy[idx + 1, i],
                         h * h * self.ddy[idx + 1, i]])
        return _hermite_eval(theta, h, data, m)

    def _compiled_higher(self, upto: int):
        while len(self._higher) < upto - self.ode.order + 1:
            exprs = on_shell_jets(self.ode, upto)
            self._higher[:] = [compile_expr(e) for e in exprs]
        return self._higher

    def jets(self, s, n: int, mode: str = "ode") -> list[np.ndarray]:
        """``[Y, Y_1, .., Y_n]`` in ``s``.

        Jets below the order come from the interpolant. In ``ode`` mode the
        rest follow from the equation and its derivatives; in ``interp`` mode
        the top jet is the derivative of the interpolated ``Y_{order-1}``.
        """
        order = self.ode.order
        out = [self.component(s, i) for i in range(min(n, order - 1) + 1)]
        if n < order:
            return out
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        env = {"s": s_arr}
        env.update({jet(self.ode.unknown, k): out[k] for k in range(order)})
        fns = self._compiled_higher(n)
        for k in range(order, n + 1):
            if k == order and mode == "interp":
                val = self.component(s, order - 1, 1)
            else:
                val = fns[k - order](env)
            val = np.broadcast_to(np.asarray(val, dtype=float), s_arr.shape).copy()
            out.append(val)
            env[jet(self.ode.unknown, k)] = val
        return out

    def to_json(self) -> dict:
        return {"ode": self.ode.describe(), "s0": self.s0, "ic": list(self.ic),
                "span": list(self.span), "steps": int(len(self.nodes) - 1),
                "tol": self.tol, "blowup": self.blowup, "notes": list(self.notes)}


def integrate_ivp(ode: CanonicalODE, ic: Sequence[float], span: tuple[float, float],
                  s0: float | None = None, tol: float = 1e-12,
                  blowup: float = BLOWUP, subdivide: int = 4) -> ODESolution:
    """Integrate a classical ODE in ``s`` over ``span`` from ``s0``.

    ``ic`` holds ``Y, Y_1, .., Y_{order-1}`` at ``s0`` (default: the left end
    of the span). When ``s0`` lies inside the span the two halves are
    integrated separately. Reaching ``|Y| > blowup`` truncates the span and
    sets the ``blowup`` flag. Each accepted step is split into ``subdivide``
    Hermite segments using the stepper's own interpolant for the inner nodes.
    """
    if ode.fractional:
        raise ValueError("integrate_ivp needs a classical ODE; apply s_substitute first")
    if ode.indep != "s":
        raise ValueError("the independent variable must be s")
    lo, hi = (float(v) for v in span)
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise SpanError(f"invalid span {span!r}")
    s0 = lo if s0 is None else float(s0)
    if not lo <= s0 <= hi:
        raise SpanError("s0 must lie inside the span")
    order = ode.order
    if len(ic) != order:
        raise ValueError(f"order-{order} ODE needs {order} initial values")
    extra = free_symbols(ode.lhs) - {"s", *ode.jets(order)}
    if extra:
        raise ValueError(f"unbound parameters {sorted(extra)}")

    f1, f2 = (compile_expr(e) for e in on_shell_jets(ode, order + 1))
    names = [jet(ode.unknown, k) for k in range(order)]

    def env_of(s, y):
        env = {"s": s}
        env.update({n: y[k] for k, n in enumerate(names)})
        return env

    def rhs(s, y):
        top = float(f1(env_of(s, y)))
        return list(y[1:]) + [top]

    def too_big(s, y):
        return blowup - abs(y[0])

    too_big.terminal = True

    rtol = max(tol * STEP_MARGIN, MIN_RTOL)
    pieces = []
    flagged = False
    notes = []
    for end in (lo, hi):
        if end == s0:
            continue
        sol = solve_ivp(rhs, (s0, end), list(map(float, ic)), method="DOP853",
                        rtol=rtol, atol=rtol * 1e-2, events=too_big, dense_output=True)
        if sol.status == 1:
            flagged = True
            notes.append(f"|Y| reached {blowup:g} near s = {sol.t[-1]:.6g}")
        elif sol.status == -1:
            if np.max(np.abs(sol.y[0])) > 1e3:
                flagged = True
                notes.append(f"step size collapsed near s = {sol.t[-1]:.6g} (pole)")
            else:
                raise IntegrationError(sol.message)
        pieces.append(_refine(sol, subdivide))
    if not pieces:
        raise SpanError("span has zero length")
    ts, ys = [], []
    for t, y in pieces:
        if t[-1] < t[0]:
            t, y = t[::-1], y[:, ::-1]
        ts.append(t)
        ys.append(y)
    if len(ts) == 2:
        t = np.concatenate([ts[0], ts[1][1:]])
        y = np.concatenate([ys[0], ys[1][:, 1:]], axis=1)
    else:
        t, y = ts[0], ys[0]
    # drop a possible duplicated terminal point
    keep = np.concatenate([[True], np.diff(t) > 0])
    t, y = t[keep], y[:, keep].T
    if len(t) < 2:
        raise IntegrationError("integration produced fewer than two points")
    env = env_of(t, [y[:, k] for k in range(order)])
    top = np.broadcast_to(np.asarray(f1(env), dtype=float), t.shape)
    env[jet(ode.unknown, order)] = top
    top1 = np.broadcast_to(np.asarray(f2(env), dtype=float), t.shape)
    dy = np.column_stack([y[:, k] for k in range(1, order)] + [top])
    if order == 1:
        ddy = top1[:, None]
    else:
        ddy = np.column_stack([y[:, k] for k in range(2, order)] + [top, top1])
    return ODESolution(ode, SVariable("s", None), t, y, dy, ddy, s0,
                       tuple(float(v) for v in ic), tol, flagged, notes)


def _refine(sol, m: int):
    t = sol.t
    if m <= 1 or len(t) < 2 or sol.sol is None:
        return t, sol.y
    frac = np.arange(m) / m
    inner = (t[:-1, None] + np.diff(t)[:, None] * frac[None, :]).ravel()
    tt = np.concatenate([inner, t[-1:]])
    yy = sol.sol(tt)
    # keep the accepted step values exactly
    yy[:, ::m] = sol.y
    return tt, yy


def residual_of_ode(ode: CanonicalODE, sol, samples: int = 200, relative: bool = False,
                    span: tuple[float, float] | None = None) -> float:
    """Max ``|lhs|`` over evenly spaced samples of the span, with the top
    derivative taken from the dense output itself.

    ``relative`` divides each value by ``1 + sum |summands|``.
    """
    if ode.fractional or ode.indep != "s":
        ode = s_substitute(ode)[0]
    lo, hi = span if span is not None else sol.span
    if not (sol.span[0] - 1e-12 <= lo < hi <= sol.span[1] + 1e-12):
        raise SpanError("sample range outside the solution span")
    s = np.linspace(lo, hi, samples)
    fn = compile_expr(ode.lhs, with_scale=relative)
    jets = sol.jets(s, ode.order, mode="interp")
    env = {"s": s}
    env.update({jet(ode.unknown, k): v for k, v in enumerate(jets)})
    missing = [n for n in fn.names if n not in env]
    if missing:
        raise ValueError(f"unbound parameters {missing}")
    if relative:
        val, scale = fn(env)
        r = np.abs(val) / (1.0 + np.abs(scale))
    else:
        r = np.abs(fn(env))
    r = np.broadcast_to(r, s.shape)
    return float(np.max(r)) if np.all(np.isfinite(r)) else math.inf


# ---------------------------------------------------------------------------
# solutions obtained by mapping another solution


@dataclass
class MappedSolution:
    """A solution built pointwise from a source solution.

    ``value`` expresses the new unknown through the source's ``s`` and jets;
    ``s_source`` maps the new ``s`` to the source's, with constant
    ``rate = ds_source / ds``. Higher jets follow by the chain rule.
    """

    source: object
    value: Expr
    unknown: str
    s_source: Callable[[np.ndarray], np.ndarray]
    s_target: Callable[[np.ndarray], np.ndarray]
    rate: float = 1.0
    label: str = ""
    _exprs: list = field(default_factory=list, repr=False)

    @property
    def span(self) -> tuple[float, float]:
        a, b = (float(v) for v in self.s_target(np.array(self.source.span)))
        return (min(a, b), max(a, b))

    @property
    def blowup(self) -> bool:
        return bool(getattr(self.source, "blowup", False))

    def _source_unknown(self) -> str:
        return self.source.unknown if isinstance(self.source, MappedSolution) else \
            self.source.ode.unknown

    def _jet_exprs(self, n: int) -> list[tuple[Expr, object]]:
        src = self._source_unknown()
        while len(self._exprs) <= n:
            if not self._exprs:
                e = self.value
            else:
                prev = self._exprs[-1][0]
                terms = [diff(prev, "s")]
                names = free_symbols(prev)
                for k in range(9):
                    name = jet(src, k)
                    if name in names:
                        terms.append(mul(sym(jet(src, k + 1)), diff(prev, name)))
                e = mul(as_expr(self.rate), add(*terms))
            needed = max([k for k in range(10) if jet(src, k) in free_symbols(e)], default=0)
            self._exprs.append((e, compile_expr(e), needed))
        return self._exprs

    def jets(self, s, n: int, mode: str = "ode") -> list[np.ndarray]:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        exprs = self._jet_exprs(n)
        need = max(e[2] for e in exprs[: n + 1])
        ss = self.s_source(s)
        src = self._source_unknown()
        base = self.source.jets(ss, need, mode)
        env = {"s": ss}
        env.update({jet(src, k): v for k, v in enumerate(base)})
        return [np.broadcast_to(np.asarray(fn(env), dtype=float), s.shape).copy()
                for _, fn, _ in exprs[: n + 1]]


def tabulate(sol, n: int = 201) -> dict[str, list[float]]:
    lo, hi = sol.span
    s = np.linspace(lo, hi, n)
    y, y1 = sol.jets(s, 1)
    return {"s": s.tolist(), "value": y.tolist(), "derivative": y1.tolist()}


__all__ = [
    "BLOWUP", "MIN_RTOL", "STEP_MARGIN", "IntegrationError", "MappedSolution", "ODESolution", "SVariable", "SpanError",
    "classical_derivative", "integrate_ivp", "on_shell_jets", "residual_of_ode",
    "s_substitute", "tabulate",
]
