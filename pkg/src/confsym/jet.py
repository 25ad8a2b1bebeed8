"""Jet space over (t, x; u): point vector fields, total derivatives and the
classical and conformable prolongation coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.integrate import solve_ivp

from .expr import (ONE, ZERO, Expr, add, as_expr, compile_expr, diff,
                   free_symbols, jet_name, jet_orders, mul, power, simplify,
                   substitute, sym, to_text)
from .expr.numeric import ZERO_TEST_SEED

T, X, U = sym("t"), sym("x"), sym("u")
ALPHA, BETA = sym("alpha"), sym("beta")

# the coordinates a JetPoint carries
JET_COORDS = ("u", "u_t", "u_x", "u_xx", "u_xxx", "u_xt", "u_xxt")

# conformable jet symbols u_T = D^beta_t u and u_X, u_XX, u_XXX for the
# sequential space derivatives of order alpha, 2 alpha, 3 alpha
FRACTIONAL_JETS = ("u_T", "u_X", "u_XX", "u_XXX")


def jet_symbols(e: Expr) -> list[str]:
    """Jet coordinates (including ``u``) occurring in ``e``, in a fixed order."""
    names = [n for n in free_symbols(e) if jet_orders(n) is not None]
    return sorted(names, key=lambda n: (sum(jet_orders(n)), n))


def shift(name: str, var: str) -> str:
    nx, nt = jet_orders(name)
    return jet_name(nx + 1, nt) if var == "x" else jet_name(nx, nt + 1)


def total_derivative(e: Expr, var: str) -> Expr:
    """``D_var e``: the partial in ``var`` plus the chain through every jet
    coordinate present in ``e``."""
    if var not in ("t", "x"):
        raise ValueError(f"total derivatives are taken in t or x, not {var!r}")
    e = simplify(e)
    terms = [diff(e, var)]
    for name in jet_symbols(e):
        terms.append(mul(sym(shift(name, var)), diff(e, name)))
    return add(*terms)


@dataclass(frozen=True)
class VectorField:
    """``xi d/dx + tau d/dt + eta d/du`` with coefficients in (t, x, u)."""

    xi: Expr
    tau: Expr
    eta: Expr
    label: str = ""

    def __post_init__(self):
        for name in ("xi", "tau", "eta"):
            e = simplify(as_expr(getattr(self, name)))
            object.__setattr__(self, name, e)
            bad = [s for s in free_symbols(e)
                   if s not in ("t", "x", "u") and jet_orders(s) is not None]
            if bad:
                raise ValueError(f"{name} of a point symmetry may not contain {bad[0]}")

    @property
    def components(self) -> tuple[Expr, Expr, Expr]:
        return (self.xi, self.tau, self.eta)

    def __call__(self, f: Expr) -> Expr:
        """Apply as a derivation to a function of (t, x, u)."""
        return add(mul(self.xi, diff(f, "x")), mul(self.tau, diff(f, "t")),
                   mul(self.eta, diff(f, "u")))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(add(self.xi, other.xi), add(self.tau, other.tau),
                           add(self.eta, other.eta), f"{self.label}+{other.label}")

    def scale(self, c) -> "VectorField":
        c = as_expr(c)
        return VectorField(mul(c, self.xi), mul(c, self.tau), mul(c, self.eta),
                           f"({to_text(c)})*{self.label}")

    def subs(self, bindings: Mapping[str, object]) -> "VectorField":
        return VectorField(substitute(self.xi, bindings), substitute(self.tau, bindings),
                           substitute(self.eta, bindings), self.label)

    def to_text(self) -> dict[str, str]:
        return {"xi": to_text(self.xi), "tau": to_text(self.tau), "eta": to_text(self.eta)}


def combine(coeffs, fields) -> VectorField:
    out = VectorField(ZERO, ZERO, ZERO, "0")
    parts = []
    for c, v in zip(coeffs, fields):
        out = out + v.scale(c)
        parts.append(f"{c}*{v.label}")
    return VectorField(out.xi, out.tau, out.eta, " + ".join(parts))


@dataclass(frozen=True)
class JetPoint:
    """A point of the truncated jet space. Coordinates are independent."""

    t: float
    x: float
    u: float
    u_t: float
    u_x: float
    u_xx: float
    u_xxx: float
    u_xt: float
    u_xxt: float
    extra: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.t > 0 and self.x > 0):
            raise ValueError("jet points need t > 0 and x > 0")
        for v in self.env().values():
            if not math.isfinite(v):
                raise ValueError("jet point coordinates must be finite")

    def env(self) -> dict[str, float]:
        out = {"t": self.t, "x": self.x}
        out.update({n: getattr(self, n) for n in JET_COORDS})
        out.update(self.extra)
        return out


# sampling box for jet points, away from the singular sets of x^(-3 alpha), t^(-beta)
JET_BOX_TX = (0.3, 2.5)
JET_BOX_U = (-2.0, 2.0)


def random_jet_points(n: int, seed: int = ZERO_TEST_SEED,
                      extra: tuple[str, ...] = ()) -> list[JetPoint]:
    """Seeded jet points; ``extra`` names further jet coordinates to fill."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n):
        t, x = rng.uniform(*JET_BOX_TX, 2)
        vals = rng.uniform(*JET_BOX_U, len(JET_COORDS))
        more = {k: float(v) for k, v in zip(extra, rng.uniform(*JET_BOX_U, len(extra)))}
        pts.append(JetPoint(float(t), float(x), *map(float, vals), extra=more))
    return pts


def jet_arrays(points: list[JetPoint], names) -> dict[str, np.ndarray]:
    envs = [p.env() for p in points]
    out = {}
    for n in names:
        if any(n not in e for e in envs):
            raise KeyError(f"jet points do not carry {n!r}")
        out[n] = np.array([e[n] for e in envs])
    return out


# ---------------------------------------------------------------------------
# prolongation


def classical_prolongation(V: VectorField, order: int = 3) -> dict[str, Expr]:
    """``eta^t, eta^x, eta^xx, eta^xxx`` by total-derivative assembly.

    ``eta^t`` and ``eta^x`` are the first-order coefficients; ``eta^xx`` and
    ``eta^xxx`` are the repeated x-prolongations. ``order`` truncates the x
    chain.
    """
    if not 1 <= order <= 3:
        raise ValueError("prolongation order must be 1, 2 or 3")
    xi, tau, eta = V.xi, V.tau, V.eta
    ux, ut = sym("u_x"), sym("u_t")
    Dx_xi, Dx_tau = total_derivative(xi, "x"), total_derivative(tau, "x")
    out = {
        "t": add(total_derivative(eta, "t"), mul(-1, ux, total_derivative(xi, "t")),
                 mul(-1, ut, total_derivative(tau, "t"))),
        "x": add(total_derivative(eta, "x"), mul(-1, ux, Dx_xi), mul(-1, ut, Dx_tau)),
    }
    prev = out["x"]
    for k in range(2, order + 1):
        key = "x" * k
        top = sym(jet_name(k, 0))
        mixed = sym(jet_name(k - 1, 1))
        prev = add(total_derivative(prev, "x"), mul(-1, top, Dx_xi), mul(-1, mixed, Dx_tau))
        out[key] = prev
    return out


def fractional_prolongation(V: VectorField, alpha=ALPHA, beta=BETA) -> dict[str, Expr]:
    """Conformable prolongation coefficients in their closed printed form.

    Keys ``t``, ``x``, ``xx``, ``xxx`` hold the coefficients of ``u_T``,
    ``u_X``, ``u_XX``, ``u_XXX``.
    """
    a, b = as_expr(alpha), as_expr(beta)
    cl = classical_prolongation(V, 3)
    xi, tau = V.xi, V.tau
    ut, ux, uxx, uxxx = (sym(n) for n in ("u_t", "u_x", "u_xx", "u_xxx"))
    one_a = add(ONE, mul(-1, a))
    one_2a = add(ONE, mul(-2, a))
    one_3a = add(ONE, mul(-3, a))
    two_3a = add(2, mul(-3, a))

    def xp(k, j):  # x^(k - j*alpha)
        return power(X, add(k, mul(-j, a)))

    eta_t = add(mul(power(T, add(ONE, mul(-1, b))), cl["t"]),
                mul(add(ONE, mul(-1, b)), tau, power(T, mul(-1, b)), ut))
    eta_x = add(mul(xp(1, 1), cl["x"]), mul(one_a, xi, xp(0, 1), ux))
    eta_xx = add(mul(xp(2, 2), cl["xx"]),
                 mul(one_a, xp(1, 2), cl["x"]),
                 mul(2, one_a, xp(1, 2), xi, uxx),
                 mul(one_a, one_2a, xp(0, 2), xi, ux))
    eta_xxx = add(mul(xp(3, 3), cl["xxx"]),
                  mul(3, one_a, xp(2, 3), cl["xx"]),
                  mul(one_a, one_2a, xp(1, 3), cl["x"]),
                  mul(3, one_a, xi, xp(2, 3), uxxx),
                  mul(3, one_a, two_3a, xi, xp(1, 3), uxx),
                  mul(one_a, one_2a, one_3a, xi, xp(0, 3), ux))
    return {"t": eta_t, "x": eta_x, "xx": eta_xx, "xxx": eta_xxx}


def fractional_jets(alpha=ALPHA, beta=BETA) -> dict[str, Expr]:
    """``u_T, u_X, u_XX, u_XXX`` written in classical jet coordinates."""
    a, b = as_expr(alpha), as_expr(beta)
    out = {"u_T": mul(power(T, add(ONE, mul(-1, b))), sym("u_t"))}
    cur = sym("u")
    for k, name in enumerate(("u_X", "u_XX", "u_XXX"), start=1):
        cur = mul(power(X, add(ONE, mul(-1, a))), total_derivative(cur, "x"))
        out[name] = cur
    return out


def prolong_function(V: VectorField, f: Expr) -> Expr:
    """``pr V(f)`` for ``f`` on the classical jet space up to third order."""
    cl = classical_prolongation(V, 3)
    coeff = {"u": V.eta, "u_t": cl["t"], "u_x": cl["x"], "u_xx": cl["xx"],
             "u_xxx": cl["xxx"]}
    terms = [mul(V.xi, diff(f, "x")), mul(V.tau, diff(f, "t"))]
    for name in jet_symbols(f):
        if name not in coeff:
            raise ValueError(f"prolongation of {name} is not available")
        terms.append(mul(coeff[name], diff(f, name)))
    return add(*terms)


def fractional_prolongation_by_variation(V: VectorField, alpha=ALPHA,
                                         beta=BETA) -> dict[str, Expr]:
    """The conformable coefficients as the variation ``pr V`` of the
    conformable jets themselves. Independent of the closed form above."""
    jets = fractional_jets(alpha, beta)
    return {"t": prolong_function(V, jets["u_T"]), "x": prolong_function(V, jets["u_X"]),
            "xx": prolong_function(V, jets["u_XX"]), "xxx": prolong_function(V, jets["u_XXX"])}


# ---------------------------------------------------------------------------
# flow


class FlowDomainError(ValueError):
    pass


def flow(V: VectorField, point, eps: float, params: Mapping[str, float] | None = None,
         rtol: float = 1e-12, atol: float = 1e-13) -> tuple[float, float, float]:
    """Integrate the Lie equations of ``V`` from ``point = (t, x, u)`` to
    group parameter ``eps``."""
    params = dict(params or {})
    t0, x0, u0 = (float(v) for v in point)
    if not (t0 > 0 and x0 > 0):
        raise FlowDomainError("flow needs t > 0 and x > 0")
    if eps == 0:
        return (t0, x0, u0)
    comps = [compile_expr(substitute(c, params)) for c in (V.tau, V.xi, V.eta)]

    def rhs(_, y):
        env = {"t": y[0], "x": y[1], "u": y[2]}
        return [float(c(env)) for c in comps]

    def leave(_, y):
        return min(y[0], y[1])

    leave.terminal = True
    sol = solve_ivp(rhs, (0.0, float(eps)), [t0, x0, u0], method="DOP853",
                    rtol=rtol, atol=atol, events=leave)
    if sol.status == 1 or not sol.success:
        raise FlowDomainError(f"flow of {V.label or 'field'} leaves t > 0, x > 0 before {eps}")
    t1, x1, u1 = sol.y[:, -1]
    if not (t1 > 0 and x1 > 0 and np.all(np.isfinite(sol.y[:, -1]))):
        raise FlowDomainError("flow left the admissible domain")
    return (float(t1), float(x1), float(u1))
