import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confsym.equations import (EQUATION_IDS, FAMILY_CONSTANTS, FAMILY_SIGN, EquationSpec,
                               basis_fields, negative_control_field, specialize_family,
                               symmetry_family)
from confsym.expr import E, free_symbols, zero_test
from confsym.jet import VectorField
from confsym.symmetry import (NotClosedError, commutator, criterion_expression,
                              criterion_sweep, express_in_basis, jacobi_defects,
                              stated_bracket_mismatches, structure_constants)

PAIRS = [(0.5, 0.5), (0.7, 0.6), (0.9, 0.3), (1.0, 1.0)]
ALL_FIELDS = [(eq, V) for eq in EQUATION_IDS for V in basis_fields(eq)]


def spec(eq, alpha, beta):
    if eq in ("burgers", "mburgers"):
        return EquationSpec(eq, alpha, beta, a=1.5, b=0.8)
    return EquationSpec(eq, alpha, beta)


def bare(V):
    return V.label.split("@")[0]


def test_fifteen_basis_fields():
    assert len(ALL_FIELDS) == 15


@pytest.mark.parametrize("ab", PAIRS)
@pytest.mark.parametrize("eq,V", ALL_FIELDS, ids=[f"{e}-{bare(v)}" for e, v in ALL_FIELDS])
def test_basis_field_satisfies_criterion(eq, V, ab):
    stats = criterion_sweep(spec(eq, *ab), V, n=100)
    assert stats.passed, stats.to_json()


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_family_satisfies_criterion(eq):
    consts = {f"c{i}": 0.3 * i - 0.7 for i in range(1, 6)}
    stats = criterion_sweep(spec(eq, 0.7, 0.6), symmetry_family(eq), constants=consts)
    assert stats.passed, stats.to_json()


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_non_symmetry_is_rejected(eq):
    stats = criterion_sweep(spec(eq, 0.7, 0.6), negative_control_field(eq))
    assert stats.max_abs > 1e-3


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_perturbed_field_is_rejected(eq):
    V = basis_fields(eq)[-1]
    W = VectorField(V.xi, V.tau, V.eta * 2, label="perturbed")
    assert criterion_sweep(spec(eq, 0.7, 0.6), W).max_abs > 1e-3


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_leading_derivative_is_eliminated(eq):
    V = basis_fields(eq)[-1]
    names = free_symbols(criterion_expression(eq, V))
    assert EquationSpec(eq).leading not in names


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_family_unit_vectors_reproduce_basis(eq):
    for V in basis_fields(eq):
        label = bare(V)
        sign = FAMILY_SIGN.get((eq, label), 1)
        W = specialize_family(eq, {FAMILY_CONSTANTS[eq][label]: sign})
        for w, v in zip(W.components, V.components):
            assert zero_test(w - v, {"a": 1.5}, relative=True).zero, (eq, label)


# --- brackets ----------------------------------------------------------------

PARAMS = {"alpha": 0.7, "beta": 0.6, "a": 1.5}


def by_label(eq):
    return {bare(V): V for V in basis_fields(eq)}


def test_kdv_brackets():
    f = by_label("kdv")
    basis = basis_fields("kdv")
    assert express_in_basis(commutator(f["V1"], f["V3"]), basis, PARAMS) == [0, 6, 0, 0]
    assert express_in_basis(commutator(f["V1"], f["V2"]), basis, PARAMS) == [0, 0, 0, 0]


def test_burgers_dilation_bracket():
    f = by_label("burgers")
    got = express_in_basis(commutator(f["V4"], f["V5"]), basis_fields("burgers"), PARAMS)
    assert got == [0, 0, 0, 0, -2]


@pytest.mark.parametrize("eq", EQUATION_IDS)
@pytest.mark.parametrize("ab", [(0.7, 0.6), (0.4, 0.9)])
def test_stated_brackets_hold(eq, ab):
    params = {"alpha": ab[0], "beta": ab[1], "a": 1.5}
    table = structure_constants(basis_fields(eq), params)
    assert stated_bracket_mismatches(eq, table) == []


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_table_is_antisymmetric(eq):
    table = structure_constants(basis_fields(eq), PARAMS)
    k = len(table.labels)
    for i in range(k):
        assert all(c == 0 for c in table.table[i][i])
        for j in range(k):
            assert table.table[i][j] == [(-c or 0.0) for c in table.table[j][i]]


@pytest.mark.parametrize("eq", EQUATION_IDS)
def test_jacobi_identity(eq):
    assert jacobi_defects(basis_fields(eq), PARAMS) == []


def test_bracket_outside_span_is_reported():
    f = by_label("kdv")
    with pytest.raises(NotClosedError):
        express_in_basis(negative_control_field("kdv"), [f["V1"], f["V2"]], PARAMS)


def test_duplicate_fields_rejected():
    V = basis_fields("kdv")[0]
    with pytest.raises(ValueError):
        structure_constants([V, V], PARAMS)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4).filter(any),
       st.sampled_from([(0.7, 0.6), (0.5, 0.9)]))
def test_linear_combinations_are_symmetries(coefs, ab):
    basis = basis_fields("kdv")
    comps = [sum((c * V.components[i] for c, V in zip(coefs, basis) if c), E("0"))
             for i in range(3)]
    W = VectorField(*comps, label="combo")
    assert criterion_sweep(spec("kdv", *ab), W, n=40).passed
    assert np.allclose(express_in_basis(W, basis, PARAMS), coefs)
