"""Reduced ordinary differential equations in a uniform symbolic form.

An ODE is stored as ``lhs == 0`` in an independent variable (``zeta``,
``omega``, ``z`` or ``s``) and an unknown ``Y`` from {Psi, Phi, W, Theta}
with jets ``Y_1 .. Y_3``. For a conformable ODE of order ``alpha`` the jet
``Y_k`` is the k-fold sequential conformable derivative; otherwise it is the
classical k-th derivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .expr import (ONE, E, Expr, add, as_expr, diff, free_symbols, mul, power,
                   solve_linear, substitute, sym, to_text)

KINDS = ("P_I", "FP_II", "FP_34", "K1", "K2", "FRACTIONAL_RICCATI", "CLASSICAL_RICCATI",
         "LINEAR_2ND_ORDER", "REDUCED_RAW")


def jet(unknown: str, k: int) -> str:
    return unknown if k == 0 else f"{unknown}_{k}"


@dataclass(frozen=True)
class CanonicalODE:
    name: str
    kind: str
    lhs: Expr
    indep: str
    unknown: str
    order: int
    fractional: bool
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ODE kind {self.kind!r}")
        if self.order not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")

    @property
    def param_map(self) -> dict[str, float]:
        return dict(self.params)

    @property
    def alpha(self):
        """Order of the conformable derivative; ``None`` when classical."""
        if not self.fractional:
            return None
        return self.param_map.get("alpha", sym("alpha"))

    def jets(self, n: int | None = None) -> list[str]:
        n = self.order if n is None else n
        return [jet(self.unknown, k) for k in range(n + 1)]

    @property
    def top(self) -> str:
        return jet(self.unknown, self.order)

    def solved(self) -> Expr:
        """The top jet as a function of the lower ones."""
        return solve_linear(self.lhs, self.top)

    def total_derivative(self, e: Expr) -> Expr:
        """``D e`` for ``e`` in (indep, Y, Y_1, ...): conformable when the
        ODE is, classical otherwise."""
        v = sym(self.indep)
        if self.fractional:
            a = as_expr(self.alpha)
            terms = [mul(power(v, add(ONE, mul(-1, a))), diff(e, self.indep))]
        else:
            terms = [diff(e, self.indep)]
        names = free_symbols(e)
        for k in range(0, 9):
            name = jet(self.unknown, k)
            if name in names:
                terms.append(mul(sym(jet(self.unknown, k + 1)), diff(e, name)))
        return add(*terms)

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "order": self.order,
                "fractional": self.fractional, "indep": self.indep,
                "unknown": self.unknown, "lhs": to_text(self.lhs),
                "params": {k: v for k, v in self.params}}


# name -> (kind, indep, unknown, order, fractional, lhs text)
_TEMPLATES = {
    # KdV under its scaling generator and the canonical forms around it
    "kdv_scaling": ("REDUCED_RAW", "zeta", "Psi", 3, True,
                    "Psi_3 + 6*Psi*Psi_1 - beta/3*zeta^alpha/alpha*Psi_1 - 2*beta/3*Psi"),
    "k1": ("K1", "omega", "W", 3, True,
           "W_3 + 6*W*W_1 - omega^alpha/alpha*W_1 - 2*W"),
    "k2": ("K2", "omega", "W", 2, True,
           "W_2 + 2*W^2 - omega^alpha/alpha*W"
           " + (gamma*(gamma + 1) + W_1 - W_1^2)/(2*W - omega^alpha/alpha)"),
    "fp34": ("FP_34", "omega", "Theta", 2, True,
             "Theta_2 - Theta_1^2/(2*Theta) - 4*sigma*Theta^2 + omega^alpha/alpha*Theta"
             " + 1/(2*Theta)"),
    "fp2": ("FP_II", "omega", "Phi", 2, True,
            "Phi_2 - 2*Phi^3 - omega^alpha/alpha*Phi - gamma"),
    # KdV under V3 + a V1
    "kdv_galilean3": ("REDUCED_RAW", "zeta", "Psi", 3, False, "Psi_3 + 6*Psi*Psi_1 + 1/a"),
    "kdv_galilean2": ("REDUCED_RAW", "zeta", "Psi", 2, False, "Psi_2 + 3*Psi^2 + zeta/a - gamma"),
    "p1": ("P_I", "z", "Phi", 2, False, "Phi_2 - 6*Phi^2 - z"),
    # mKdV
    "mkdv_scaling3": ("REDUCED_RAW", "zeta", "Psi", 3, True,
                      "Psi_3 - 6*Psi^2*Psi_1 - beta/3*zeta^alpha/alpha*Psi_1 - beta/3*Psi"),
    "mkdv_scaling2": ("REDUCED_RAW", "zeta", "Psi", 2, True,
                      "Psi_2 - 2*Psi^3 - beta/3*zeta^alpha/alpha*Psi - gamma"),
    "fp2_mu": ("FP_II", "omega", "Phi", 2, True,
               "Phi_2 - 2*Phi^3 - omega^alpha/alpha*Phi - mu"),
    # Burgers
    "burgers_scaling": ("REDUCED_RAW", "zeta", "Psi", 2, True,
                        "b*Psi_2 + a*Psi*Psi_1 - beta/2*zeta^alpha/alpha*Psi_1 - beta/2*Psi"),
    "burgers_riccati": ("FRACTIONAL_RICCATI", "zeta", "Psi", 1, True,
                        "b*Psi_1 + a/2*Psi^2 - beta/2*zeta^alpha/alpha*Psi - gamma"),
    "burgers_linear": ("LINEAR_2ND_ORDER", "zeta", "Phi", 2, True,
                       "Phi_2 - beta/(2*b)*zeta^alpha/alpha*Phi_1 - a*gamma/(2*b^2)*Phi"),
    # the zeroth-order coefficient as usually quoted; agrees with the line
    # above only when a = -2b
    "burgers_linear_quoted": ("LINEAR_2ND_ORDER", "zeta", "Phi", 2, True,
                              "Phi_2 - beta/(2*b)*zeta^alpha/alpha*Phi_1 + gamma/b*Phi"),
    "burgers_galilean2": ("REDUCED_RAW", "zeta", "Psi", 2, False, "b*Psi_2 + a*Psi*Psi_1 + 1/mu"),
    "burgers_classical_riccati": ("CLASSICAL_RICCATI", "zeta", "Psi", 1, False,
                                  "b*Psi_1 + a/2*Psi^2 + zeta/mu - gamma"),
    # modified Burgers
    "mburgers_scaling": ("REDUCED_RAW", "zeta", "Psi", 2, True,
                         "b*Psi_2 + a*Psi^2*Psi_1 - beta/2*zeta^alpha/alpha*Psi_1 - beta/4*Psi"),
    "mburgers_canonical": ("REDUCED_RAW", "omega", "Phi", 2, True,
                           "b*Phi_2 + (a*Phi^2 - omega^alpha/alpha)*Phi_1 - Phi/2"),
    # a plain oscillator, for integrator checks
    "oscillator": ("LINEAR_2ND_ORDER", "s", "Phi", 2, False, "Phi_2 + Phi"),
}

ODE_NAMES = tuple(_TEMPLATES)


def template_params(name: str) -> set[str]:
    kind, indep, unknown, order, frac, text = _TEMPLATES[name]
    names = free_symbols(E(text))
    return {n for n in names if n not in (indep,) and not n.startswith(unknown)}


def make_ode(name: str, params: Mapping[str, float] | None = None) -> CanonicalODE:
    """Instantiate a named ODE; parameters not given stay symbolic."""
    if name not in _TEMPLATES:
        raise KeyError(f"unknown ODE {name!r}")
    kind, indep, unknown, order, frac, text = _TEMPLATES[name]
    wanted = template_params(name) | ({"alpha"} if frac else set())
    bound = {k: float(v) for k, v in (params or {}).items() if k in wanted}
    if name == "fp34" and "sigma" not in bound:
        bound["sigma"] = -1.0 / 6.0
    lhs = substitute(E(text), bound) if bound else E(text)
    return CanonicalODE(name, kind, lhs, indep, unknown, order, frac,
                        tuple(sorted(bound.items())))


def with_lhs(ode: CanonicalODE, lhs: Expr, **changes) -> CanonicalODE:
    fields = dict(name=ode.name, kind=ode.kind, lhs=lhs, indep=ode.indep,
                  unknown=ode.unknown, order=ode.order, fractional=ode.fractional,
                  params=ode.params)
    fields.update(changes)
    return CanonicalODE(**fields)


__all__ = ["CanonicalODE", "KINDS", "ODE_NAMES", "jet", "make_ode", "template_params",
           "with_lhs"]
