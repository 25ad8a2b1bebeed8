import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confsym.expr import E, substitute, zero_test
from confsym.odes import make_ode
from confsym.odesolve import integrate_ivp, residual_of_ode, s_substitute
from confsym.reductions import (INTEGRATION_PAIRS, SCALE_MAPS, ColeHopfError, GridSolution,
                                P34DomainError, PipelineMismatchError, PipelineSolution,
                                catalog, cole_hopf, flip_sign_of_term, generator_invariance,
                                get_pipeline, integration_constant_check, k2_integrates_k1,
                                lift, miura_forward, miura_roundtrip, p34_map,
                                p34_report, reduce_check, scale_roundtrip_error,
                                scale_solution_check, scale_to_canonical, solve_pipeline)

KEYS = [p.key for p in catalog()]
AB = [(1.0, 1.0), (0.5, 0.5), (0.7, 0.6)]


def test_catalog_has_seven_pipelines():
    assert len(KEYS) == 7
    assert get_pipeline("kdv/V4").key == "kdv/V4/fp2"
    assert get_pipeline("burgers/V3+μV1").key == "burgers/V3+muV1"
    with pytest.raises(KeyError):
        get_pipeline("kdv/V9")


@pytest.mark.parametrize("key,zeta", [
    ("kdv/V4/fp2", "x*t^(-beta/(3*alpha))"),
    ("mkdv/V3", "x*t^(-beta/(3*alpha))"),
    ("burgers/V4", "x*t^(-beta/(2*alpha))"),
    ("mburgers/V3", "x*t^(-beta/(2*alpha))"),
])
def test_similarity_variables(key, zeta):
    got = get_pipeline(key).map.exprs({})["zeta"]
    assert zero_test(got - E(zeta), relative=True).zero


@pytest.mark.parametrize("ab", AB)
@pytest.mark.parametrize("key", KEYS)
def test_reduction_matches_reduced_ode(key, ab):
    rep = reduce_check(key, {"alpha": ab[0], "beta": ab[1]})
    assert rep.zero, rep.to_json()


@pytest.mark.parametrize("key", KEYS)
def test_sign_flip_is_detected(key):
    pipe = get_pipeline(key)
    p = pipe.params()
    bad = flip_sign_of_term(make_ode(pipe.map.reduced, p))
    rep = reduce_check(key, p, bad)
    assert not rep.zero and rep.max_abs > 1e-3


def test_foreign_ode_is_refused():
    with pytest.raises(PipelineMismatchError):
        reduce_check("kdv/V4/fp2", None, make_ode("k1"))
    with pytest.raises(PipelineMismatchError):
        reduce_check("kdv/V4/fp2", None, make_ode("mkdv_scaling3"))


@pytest.mark.parametrize("key", KEYS)
def test_generator_leaves_form_invariant(key):
    rep = generator_invariance(key)
    assert rep["zeta_invariant"] and rep["form_invariant"], rep


@pytest.mark.parametrize("pair", INTEGRATION_PAIRS)
def test_integrated_forms_differentiate_back(pair):
    assert integration_constant_check(*pair, {"alpha": 0.7, "beta": 0.6, "a": 1.5, "b": 0.8,
                                              "mu": 1.2, "gamma": 0.4})


@pytest.mark.parametrize("alpha", [0.7, 1.0])
def test_k2_integrates_k1(alpha):
    assert k2_integrates_k1({"alpha": alpha, "gamma": 0.3})


# --- scale maps -----------------------------------------------------------------

SCALE_PARAMS = {"alpha": 0.7, "beta": 0.6, "a": 1.5, "b": 0.8, "gamma": 1.0}


@pytest.mark.parametrize("name", list(SCALE_MAPS))
def test_scale_map_is_exact(name):
    rep = scale_to_canonical(name, SCALE_PARAMS).check()
    assert rep["zero"], rep


@pytest.mark.parametrize("name", list(SCALE_MAPS))
def test_scale_map_roundtrip(name):
    assert scale_roundtrip_error(scale_to_canonical(name, SCALE_PARAMS)) < 1e-12


@pytest.mark.parametrize("name", list(SCALE_MAPS))
def test_mapped_solutions_satisfy_other_side(name):
    rep = scale_solution_check(name, SCALE_PARAMS)
    assert rep["target_residual"] < 1e-11 and rep["source_residual"] < 1e-11, rep


def test_modified_kdv_constant_scales_with_beta():
    bm = scale_to_canonical("mkdv_scaling2", {"alpha": 0.7, "beta": 0.6, "gamma": 1.0})
    assert bm.target_params["mu"] == pytest.approx(5.0)
    bm1 = scale_to_canonical("mkdv_scaling2", {"alpha": 0.7, "beta": 1.0, "gamma": 1.0})
    assert bm1.target_params["mu"] == pytest.approx(3.0)


def test_painleve_one_scale_constants():
    bm = scale_to_canonical("kdv_galilean2", {"a": 2.0, "gamma": 0.5})
    assert bm.c == pytest.approx(0.25 ** 0.2)
    assert bm.k == pytest.approx(-2 * 0.25 ** 0.4)
    assert bm.shift == pytest.approx(1.0)


def test_unknown_scale_map():
    with pytest.raises(KeyError):
        scale_to_canonical("k1", {})


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(0.2, 1.0))
def test_kdv_scale_map_exact_for_any_orders(alpha, beta):
    assert scale_to_canonical("kdv_scaling", {"alpha": alpha, "beta": beta}).check()["zero"]


# --- Miura-type map and P34 ---------------------------------------------------------


def fp2_solution(alpha=0.7, gamma=1.0, span=(1e-3, 1.5)):
    ode = s_substitute(make_ode("fp2", {"alpha": alpha, "gamma": gamma}))[0]
    return integrate_ivp(ode, (0.1, 0.0), span)


def test_zero_phi_gives_zero_w():
    ode = s_substitute(make_ode("fp2", {"alpha": 0.7, "gamma": 0.0}))[0]
    sol = integrate_ivp(ode, (0.0, 0.0), (1e-3, 2.0))
    w = miura_forward(sol)
    assert np.all(w.jets(np.linspace(0.01, 1.9, 20), 2)[0] == 0)


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_miura_roundtrip(gamma):
    rep = miura_roundtrip(fp2_solution(gamma=gamma), gamma)
    assert rep["max_error"] < 1e-8 and rep["flagged"] < 4


@pytest.mark.parametrize("alpha", [0.7, 1.0])
def test_miura_image_solves_k2(alpha):
    w = miura_forward(fp2_solution(alpha))
    k2 = make_ode("k2", {"alpha": alpha, "gamma": 1.0})
    assert residual_of_ode(k2, w, relative=True) < 1e-8


def test_miura_inverse_is_identity_at_alpha_one_symbolically():
    # W = -Phi_1 - Phi^2, W_1 from FP_II with Phi_2 eliminated
    W = E("-Phi_1 - Phi^2")
    W1 = E("-(2*Phi^3 + s*Phi + gamma) - 2*Phi*Phi_1")
    back = substitute(E("(W_1 + gamma)/(2*W - s)"), {"W": W, "W_1": W1})
    assert zero_test(back - E("Phi"), relative=True).zero


def test_p34_is_singular_at_minus_quarter():
    with pytest.raises(P34DomainError):
        p34_map(miura_forward(fp2_solution()), -0.25)


@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_p34_report_is_finite(gamma):
    w = miura_forward(fp2_solution(gamma=gamma))
    rep = p34_report(w, gamma, 0.7)
    assert rep.finite and math.isfinite(rep.max_residual)
    assert set(rep.to_json()) >= {"gamma", "max_residual", "mean_residual", "finite"}


# --- Cole-Hopf ------------------------------------------------------------------------


def test_constant_phi_gives_zero_psi():
    flat = integrate_ivp(s_substitute(make_ode("burgers_linear", {
        "alpha": 0.7, "beta": 0.6, "a": 1.0, "b": 1.0, "gamma": 0.0}))[0],
        (2.0, 0.0), (0.0, 2.0))
    psi = cole_hopf(flat, 1.0, 1.0)
    assert np.all(psi.jets(np.linspace(0, 2, 11), 0)[0] == 0)


def test_cole_hopf_image_solves_riccati():
    p = {"alpha": 0.7, "beta": 0.6, "a": 1.0, "b": 1.0, "gamma": 1.0}
    lin = s_substitute(make_ode("burgers_linear", p))[0]
    phi = integrate_ivp(lin, (1.0, 0.0), (1e-3, 3.0))
    psi = cole_hopf(phi, p["a"], p["b"])
    assert residual_of_ode(make_ode("burgers_riccati", p), psi) < 1e-8


def test_quoted_linear_form_fails_unless_a_is_minus_two_b():
    p = {"alpha": 0.7, "beta": 0.6, "a": 1.0, "b": 1.0, "gamma": 1.0}
    lin = s_substitute(make_ode("burgers_linear_quoted", p))[0]
    psi = cole_hopf(integrate_ivp(lin, (1.0, 0.0), (1e-3, 1.0)), p["a"], p["b"])
    assert residual_of_ode(make_ode("burgers_riccati", p), psi) > 1e-2
    q = dict(p, a=-2.0)
    lin = s_substitute(make_ode("burgers_linear_quoted", q))[0]
    psi = cole_hopf(integrate_ivp(lin, (1.0, 0.0), (1e-3, 1.0)), q["a"], q["b"])
    assert residual_of_ode(make_ode("burgers_riccati", q), psi) < 1e-8


def test_cole_hopf_refuses_vanishing_phi():
    sol = integrate_ivp(make_ode("oscillator"), (1.0, 0.0), (0.0, 3.0))
    with pytest.raises(ColeHopfError):
        cole_hopf(sol, 1.0, 1.0)


# --- lifting --------------------------------------------------------------------------


class _ConstantPsi:
    span = (-100.0, 100.0)

    def __init__(self, c):
        self.c = c

    def jets(self, s, n, mode="ode"):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return [np.full(s.shape, self.c)] + [np.zeros(s.shape)] * n


def test_lift_of_constant_psi():
    pipe = get_pipeline("kdv/V3+aV1")
    p = pipe.params()
    solved = PipelineSolution(pipe, p, None, _ConstantPsi(0.25))
    t = np.linspace(0.5, 2.0, 7)
    x = np.linspace(0.5, 2.0, 5)
    g = lift(pipe.key, solved, t, x)
    want = 0.25 + t ** p["beta"] / (p["a"] * p["beta"])
    assert np.allclose(g.fields["u"], want[:, None], rtol=0, atol=1e-14)
    for name in ("u_x", "u_xx", "u_xxx"):
        assert np.all(g.fields[name] == 0)
    assert g.provenance["ode"] is None and not g.flagged.any()


def test_lift_flags_nodes_outside_span():
    pipe = get_pipeline("mkdv/V3")
    p = pipe.params()
    stub = _ConstantPsi(0.0)
    stub.span = (0.0, 1.0)
    g = lift(pipe.key, PipelineSolution(pipe, p, None, stub), np.linspace(0.5, 2, 10),
             np.linspace(0.5, 4, 10))
    assert 0 < g.flagged.sum() < g.flagged.size


def test_solved_pipeline_matches_reduced_ode():
    sol = solve_pipeline("mkdv/V3", s_needed=(0.3, 1.5))
    red = make_ode("mkdv_scaling2", sol.params)
    assert residual_of_ode(red, sol.psi, relative=True, span=(0.3, 1.5)) < 1e-8


def test_grid_solution_validation():
    t = np.array([0.5, 1.0])
    x = np.array([0.5])
    with pytest.raises(ValueError):
        GridSolution("k", np.array([0.0, 1.0]), x, {}, np.zeros((2, 1), bool), {}, {})
    with pytest.raises(ValueError):
        GridSolution("k", t, x, {"u": np.zeros((1, 2))}, np.zeros((2, 1), bool), {}, {})
