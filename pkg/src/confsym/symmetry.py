"""The infinitesimal symmetry criterion, Lie brackets and structure constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .equations import EquationSpec, basis_fields
from .expr import (ZERO, Expr, add, compile_expr, diff, free_symbols, jet_orders,
                   mul, random_env, simplify, substitute, zero_test)
from .expr.numeric import ZERO_TEST_SEED
from .jet import (JetPoint, VectorField, fractional_jets, fractional_prolongation,
                  jet_arrays, random_jet_points, shift, total_derivative)

_FRACTIONAL_KEYS = {"u_T": "t", "u_X": "x", "u_XX": "xx", "u_XXX": "xxx"}


def _criterion_symbolic(eq: EquationSpec, V: VectorField) -> Expr:
    delta = eq.fractional_form
    pro = fractional_prolongation(V)
    terms = [mul(V.xi, diff(delta, "x")), mul(V.tau, diff(delta, "t")),
             mul(V.eta, diff(delta, "u"))]
    for name, key in _FRACTIONAL_KEYS.items():
        d = diff(delta, name)
        if d != ZERO:
            terms.append(mul(pro[key], d))
    expr = substitute(add(*terms), fractional_jets())
    return eliminate_on_shell(eq, expr)


def eliminate_on_shell(eq: EquationSpec, expr: Expr) -> Expr:
    """Impose ``Delta = 0`` by replacing the leading x-derivative, and its
    t-derivative where that occurs."""
    lead = eq.leading
    sol = eq.leading_solution
    out = substitute(expr, {lead: sol})
    lead_t = shift(lead, "t")
    if lead_t in free_symbols(out):
        out = substitute(out, {lead_t: total_derivative(sol, "t")})
    return out


@lru_cache(maxsize=256)
def criterion_expression(eq_id: str, V: VectorField) -> Expr:
    """``pr V (Delta)`` on ``Delta = 0`` as an expression in the jet
    coordinates, with every parameter symbolic."""
    return _criterion_symbolic(EquationSpec(eq_id), V)


@lru_cache(maxsize=256)
def _compiled_criterion(eq_id: str, V: VectorField, params: tuple):
    e = criterion_expression(eq_id, V)
    return compile_expr(substitute(e, dict(params)) if params else e)


def criterion_residuals(eq: EquationSpec, V: VectorField, points: Sequence[JetPoint],
                        constants: Mapping[str, float] | None = None) -> np.ndarray:
    """Criterion values at many jet points; every parameter must be bound by
    ``eq`` or ``constants``."""
    params = dict(eq.params)
    params.update(constants or {})
    fn = _compiled_criterion(eq.id, V, tuple(sorted(params.items())))
    jets = [n for n in fn.names if jet_orders(n) is not None or n in ("t", "x")]
    unbound = [n for n in fn.names if n not in jets]
    if unbound:
        raise KeyError(f"unbound parameter {unbound[0]!r}")
    for p in points:
        if not (p.t > 0 and p.x > 0):
            raise ValueError("criterion needs t > 0 and x > 0")
    env = jet_arrays(list(points), jets)
    return np.broadcast_to(np.asarray(fn(env), dtype=float), (len(points),)).copy()


def criterion_residual(eq: EquationSpec, V: VectorField, p: JetPoint,
                       constants: Mapping[str, float] | None = None) -> float:
    return float(criterion_residuals(eq, V, [p], constants)[0])


def extra_jet_names(eq: EquationSpec, V: VectorField) -> tuple[str, ...]:
    """Jet coordinates beyond those of a JetPoint that the criterion needs."""
    base = {"t", "x", "u", "u_t", "u_x", "u_xx", "u_xxx", "u_xt", "u_xxt"}
    names = free_symbols(criterion_expression(eq.id, V))
    return tuple(sorted(n for n in names if jet_orders(n) is not None and n not in base))


@dataclass
class CriterionStats:
    label: str
    max_abs: float
    mean_abs: float
    points: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.points > 0 and self.max_abs < self.tol

    def to_json(self) -> dict:
        return {"field": self.label, "max_abs_residual": self.max_abs,
                "mean_abs_residual": self.mean_abs, "points": self.points,
                "tol": self.tol, "pass": self.passed}


def criterion_sweep(eq: EquationSpec, V: VectorField, n: int = 100, seed: int = ZERO_TEST_SEED,
                    tol: float = 1e-8, constants: Mapping[str, float] | None = None
                    ) -> CriterionStats:
    pts = random_jet_points(n, seed, extra_jet_names(eq, V))
    r = np.abs(criterion_residuals(eq, V, pts, constants))
    if not np.all(np.isfinite(r)):
        return CriterionStats(V.label, math.inf, math.inf, n, tol)
    return CriterionStats(V.label, float(r.max()), float(r.mean()), n, tol)


# ---------------------------------------------------------------------------
# Lie algebra


def commutator(V: VectorField, W: VectorField) -> VectorField:
    """``[V, W]`` with components ``V(W^i) - W(V^i)``."""
    comps = [simplify(add(V(w), mul(-1, W(v)))) for v, w in zip(V.components, W.components)]
    return VectorField(*comps, label=f"[{V.label},{W.label}]")


class NotClosedError(ArithmeticError):
    pass


@dataclass
class StructureTable:
    labels: list[str]
    # table[i][j] = coefficients of [V_i, V_j] in the basis
    table: list[list[list[float]]]
    params: dict[str, float] = field(default_factory=dict)

    def coefficients(self, i: str, j: str) -> dict[str, float]:
        a, b = self.labels.index(i), self.labels.index(j)
        return {k: c for k, c in zip(self.labels, self.table[a][b]) if c != 0.0}

    def to_json(self) -> dict:
        return {"basis": self.labels, "params": self.params,
                "brackets": [[{k: c for k, c in zip(self.labels, cell) if c != 0.0}
                              for cell in row] for row in self.table]}


def _round(c: float) -> float:
    r = round(c, 10)
    return 0.0 if r == 0 else r


def express_in_basis(W: VectorField, fields: Sequence[VectorField], params: Mapping[str, float],
                     n: int = 40, seed: int = ZERO_TEST_SEED) -> list[float]:
    """Constant coefficients ``c`` with ``W = sum c_k V_k``, found by least
    squares at sampled points and confirmed by the zero-test."""
    rng = np.random.default_rng(seed)
    env = random_env(("t", "x", "u"), n, rng)
    env.update({k: np.full(n, float(v)) for k, v in params.items()})

    def sample(F: VectorField) -> np.ndarray:
        cols = []
        for comp in F.components:
            fn = compile_expr(substitute(comp, dict(params)))
            cols.append(np.broadcast_to(np.asarray(fn(env), dtype=float), (n,)))
        return np.concatenate(cols)

    A = np.stack([sample(V) for V in fields], axis=1)
    y = sample(W)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if np.linalg.matrix_rank(A) < len(fields):
        raise NotClosedError("basis fields are linearly dependent at the sample points")
    coef = [_round(float(c)) for c in coef]
    rest = W
    for c, V in zip(coef, fields):
        if c:
            rest = VectorField(*(add(r, mul(-c, v)) for r, v in zip(rest.components, V.components)))
    for comp in rest.components:
        if not zero_test(comp, params, relative=True):
            raise NotClosedError(f"{W.label} is not in the span of the basis")
    return coef


def structure_constants(fields: Sequence[VectorField], params: Mapping[str, float]
                        ) -> StructureTable:
    labels = [f.label.split("@")[0] for f in fields]
    if len(set(labels)) != len(labels):
        raise ValueError("fields must be pairwise distinct")
    k = len(fields)
    table = [[[0.0] * k for _ in range(k)] for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            c = express_in_basis(commutator(fields[i], fields[j]), fields, params)
            table[i][j] = c
            table[j][i] = [_round(-v) for v in c]
    return StructureTable(labels, table, dict(params))


def jacobi_defects(fields: Sequence[VectorField], params: Mapping[str, float]) -> list[tuple]:
    """Triples whose cyclic double bracket fails the zero-test."""
    bad = []
    k = len(fields)
    for i in range(k):
        for j in range(i + 1, k):
            for m in range(j + 1, k):
                A, B, C = fields[i], fields[j], fields[m]
                terms = [commutator(commutator(A, B), C), commutator(commutator(B, C), A),
                         commutator(commutator(C, A), B)]
                for idx in range(3):
                    s = add(*(t.components[idx] for t in terms))
                    if not zero_test(s, params, relative=True):
                        bad.append((A.label, B.label, C.label))
                        break
    return bad


def stated_bracket_mismatches(eq_id: str, table: StructureTable) -> list[str]:
    """Compare a computed table with the quoted brackets for ``eq_id``."""
    from .equations import STATED_BRACKETS
    from .expr import E, evaluate
    out = []
    for (i, j), want in STATED_BRACKETS[eq_id].items():
        got = table.coefficients(i, j)
        want_num = {k: evaluate(E(v), table.params) for k, v in want.items()}
        keys = set(got) | set(want_num)
        if any(abs(got.get(k, 0.0) - want_num.get(k, 0.0)) > 1e-9 for k in keys):
            out.append(f"[{i},{j}]: computed {got}, stated {want_num}")
    return out


def algebra(eq_id: str) -> list[VectorField]:
    return basis_fields(eq_id)


__all__ = [
    "CriterionStats", "NotClosedError", "StructureTable", "algebra", "commutator",
    "criterion_expression", "criterion_residual", "criterion_residuals", "criterion_sweep",
    "eliminate_on_shell", "express_in_basis", "extra_jet_names", "jacobi_defects",
    "stated_bracket_mismatches", "structure_constants",
]
