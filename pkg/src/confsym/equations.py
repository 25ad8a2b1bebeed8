"""The four conformable evolution equations, their classical equivalents and
their point-symmetry algebras."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .expr import E, Expr, simplify, solve_linear, substitute, to_text
from .jet import VectorField, fractional_jets

EQUATION_IDS = ("kdv", "mkdv", "burgers", "mburgers")

# Delta = 0 in conformable jets: u_T = D^beta_t u, u_X = D^alpha_x u, ...
_FRACTIONAL = {
    "kdv": "u_T + 6*u*u_X + u_XXX",
    "mkdv": "u_T - 6*u^2*u_X + u_XXX",
    "burgers": "u_T + a*u*u_X + b*u_XX",
    "mburgers": "u_T + a*u^2*u_X + b*u_XX",
}

# the same equations written out with classical partials, as usually quoted
PRINTED_CLASSICAL = {
    "kdv": "t^(1-beta)*u_t + 6*x^(1-alpha)*u*u_x + (1-alpha)*(1-2*alpha)*x^(1-3*alpha)*u_x"
           " + 3*(1-alpha)*x^(2-3*alpha)*u_xx + x^(3-3*alpha)*u_xxx",
    "mkdv": "t^(1-beta)*u_t - 6*x^(1-alpha)*u^2*u_x + (1-alpha)*(1-2*alpha)*x^(1-3*alpha)*u_x"
            " + 3*(1-alpha)*x^(2-3*alpha)*u_xx + x^(3-3*alpha)*u_xxx",
    "burgers": "t^(1-beta)*u_t + a*x^(1-alpha)*u*u_x + b*(1-alpha)*x^(1-2*alpha)*u_x"
               " + b*x^(2-2*alpha)*u_xx",
    "mburgers": "t^(1-beta)*u_t + a*x^(1-alpha)*u^2*u_x + b*(1-alpha)*x^(1-2*alpha)*u_x"
                " + b*x^(2-2*alpha)*u_xx",
}

_LEADING = {"kdv": "u_xxx", "mkdv": "u_xxx", "burgers": "u_xx", "mburgers": "u_xx"}

# basis generators as (xi, tau, eta)
_BASIS = {
    "kdv": [
        ("V1", "0", "t^(1-beta)", "0"),
        ("V2", "x^(1-alpha)", "0", "0"),
        ("V3", "6*t^beta*x^(1-alpha)/beta", "0", "1"),
        ("V4", "-x/(2*alpha)", "-3*t/(2*beta)", "u"),
    ],
    "mkdv": [
        ("V1", "0", "t^(1-beta)", "0"),
        ("V2", "x^(1-alpha)", "0", "0"),
        ("V3", "x/alpha", "3*t/beta", "-u"),
    ],
    "burgers": [
        ("V1", "0", "t^(1-beta)", "0"),
        ("V2", "x^(1-alpha)", "0", "0"),
        ("V3", "a*t^beta*x^(1-alpha)/beta", "0", "1"),
        ("V4", "-x/alpha", "-2*t/beta", "u"),
        ("V5", "x*t^beta/(alpha*beta)", "t^(1+beta)/beta^2", "-t^beta*u/beta + x^alpha/(a*alpha)"),
    ],
    "mburgers": [
        ("V1", "0", "t^(1-beta)", "0"),
        ("V2", "x^(1-alpha)", "0", "0"),
        ("V3", "2*x/alpha", "4*t/beta", "-u"),
    ],
}

# the general solution of each determining system, linear in c1..c5
_FAMILY = {
    "kdv": ("-c1*x/(2*alpha) + 6*c3*t^beta*x^(1-alpha)/beta + c4*x^(1-alpha)",
            "-3*c1*t/(2*beta) + c2*t^(1-beta)", "c1*u + c3"),
    "mkdv": ("-c1*x/alpha + c3*x^(1-alpha)", "-3*c1*t/beta + c2*t^(1-beta)", "c1*u"),
    "burgers": ("c1*x*t^beta/(alpha*beta) - c2*x/alpha + a*c3*t^beta*x^(1-alpha)/beta"
                " + c5*x^(1-alpha)",
                "c1*t^(1+beta)/beta^2 - 2*c2*t/beta + c4*t^(1-beta)",
                "(-c1*t^beta/beta + c2)*u + c1*x^alpha/(a*alpha) + c3"),
    "mburgers": ("-2*c1*x/alpha + c3*x^(1-alpha)", "-4*c1*t/beta + c2*t^(1-beta)", "c1*u"),
}

# which constant switches on which basis field
FAMILY_CONSTANTS = {
    "kdv": {"V1": "c2", "V2": "c4", "V3": "c3", "V4": "c1"},
    "mkdv": {"V1": "c2", "V2": "c3", "V3": "c1"},
    "burgers": {"V1": "c4", "V2": "c5", "V3": "c3", "V4": "c2", "V5": "c1"},
    "mburgers": {"V1": "c2", "V2": "c3", "V3": "c1"},
}
# the family's c1 direction is -V3 for these two
FAMILY_SIGN = {("mkdv", "V3"): -1, ("mburgers", "V3"): -1}

# Brackets quoted alongside each algebra: (i, j) -> {k: coefficient text}
STATED_BRACKETS = {
    "kdv": {
        ("V1", "V2"): {}, ("V1", "V3"): {"V2": "6"}, ("V1", "V4"): {"V1": "-3/2"},
        ("V2", "V3"): {}, ("V2", "V4"): {"V2": "-1/2"}, ("V3", "V4"): {"V3": "1"},
    },
    "mkdv": {("V1", "V2"): {}, ("V1", "V3"): {"V1": "3"}, ("V2", "V3"): {"V2": "1"}},
    "burgers": {
        ("V1", "V2"): {}, ("V2", "V3"): {}, ("V3", "V5"): {},
        ("V2", "V4"): {"V2": "-1"}, ("V2", "V5"): {"V3": "1/a"},
        ("V1", "V3"): {"V2": "a"}, ("V1", "V4"): {"V1": "-2"},
        ("V1", "V5"): {"V4": "-1"}, ("V3", "V4"): {"V3": "1"}, ("V4", "V5"): {"V5": "-2"},
    },
    "mburgers": {("V1", "V2"): {}, ("V1", "V3"): {"V1": "4"}, ("V2", "V3"): {"V2": "2"}},
}


@dataclass(frozen=True)
class EquationSpec:
    """One of the four equations. Parameters left as ``None`` stay symbolic."""

    id: str
    alpha: float | None = None
    beta: float | None = None
    a: float | None = None
    b: float | None = None

    def __post_init__(self):
        if self.id not in EQUATION_IDS:
            raise ValueError(f"unknown equation {self.id!r}; expected one of {EQUATION_IDS}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v!r}")
        if self.id in ("kdv", "mkdv") and (self.a is not None or self.b is not None):
            raise ValueError("the KdV family has fixed coefficients; a and b do not apply")
        if self.id in ("burgers", "mburgers") and self.b == 0:
            raise ValueError("b = 0 removes the second-order term")

    @property
    def params(self) -> dict[str, float]:
        """Numerically bound parameters."""
        names = ("alpha", "beta", "a", "b")
        return {n: float(getattr(self, n)) for n in names if getattr(self, n) is not None}

    @property
    def order(self) -> int:
        return 3 if self.id in ("kdv", "mkdv") else 2

    @property
    def leading(self) -> str:
        return _LEADING[self.id]

    @cached_property
    def fractional_form(self) -> Expr:
        """``Delta`` in conformable jets ``u_T, u_X, u_XX, u_XXX``; parameters symbolic."""
        return E(_FRACTIONAL[self.id])

    @cached_property
    def classical_form(self) -> Expr:
        """``Delta`` rewritten with ``D^alpha f = x^(1-alpha) f_x``; parameters symbolic."""
        return substitute(self.fractional_form, fractional_jets())

    @cached_property
    def leading_solution(self) -> Expr:
        """The leading x-derivative solved from ``Delta = 0``."""
        return solve_linear(self.classical_form, self.leading)

    def bind(self, e: Expr) -> Expr:
        return substitute(e, self.params) if self.params else simplify(e)

    def basis(self) -> list[VectorField]:
        return basis_fields(self.id)

    def family(self) -> VectorField:
        return symmetry_family(self.id)


def basis_fields(eq_id: str) -> list[VectorField]:
    return [VectorField(E(xi), E(tau), E(eta), f"{label}@{eq_id}")
            for label, xi, tau, eta in _BASIS[eq_id]]


def symmetry_family(eq_id: str) -> VectorField:
    xi, tau, eta = _FAMILY[eq_id]
    return VectorField(E(xi), E(tau), E(eta), f"family@{eq_id}")


def specialize_family(eq_id: str, constants: Mapping[str, float]) -> VectorField:
    fam = symmetry_family(eq_id)
    full = {f"c{i}": 0 for i in range(1, 6)}
    full.update(constants)
    return fam.subs(full)


def printed_classical_form(eq_id: str) -> Expr:
    return E(PRINTED_CLASSICAL[eq_id])


def describe(eq: EquationSpec) -> dict:
    return {"id": eq.id, "params": eq.params, "fractional_form": to_text(eq.fractional_form),
            "classical_form": PRINTED_CLASSICAL[eq.id], "leading": eq.leading}


def negative_control_field(eq_id: str) -> VectorField:
    """A field that is not a symmetry of any of the four equations."""
    return VectorField(E("x"), E("0"), E("0"), f"bogus@{eq_id}")


__all__ = [
    "EQUATION_IDS", "EquationSpec", "FAMILY_CONSTANTS", "FAMILY_SIGN", "PRINTED_CLASSICAL",
    "STATED_BRACKETS", "basis_fields", "describe", "negative_control_field",
    "printed_classical_form", "specialize_family", "symmetry_family",
]
