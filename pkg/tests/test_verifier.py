import numpy as np
import pytest

from confsym.equations import EquationSpec
from confsym.odes import make_ode
from confsym.odesolve import integrate_ivp, s_substitute
from confsym.reductions import GridSolution, miura_forward
from confsym.verifier import (CHECKS, LIFT_KEYS, LIFT_TOLS, MissingPartialsError, ResidualReport,
                              RunConfig, canonical, k1_k2_identity_check, lift_report,
                              pde_residual, run_suite)


def constant_grid(value, names=("u", "u_t", "u_x", "u_xx", "u_xxx"), n=6):
    t = np.linspace(0.5, 2.0, n)
    x = np.linspace(0.5, 2.0, n)
    fields = {k: np.zeros((n, n)) for k in names}
    if "u" in fields:
        fields["u"][:] = value
    return GridSolution("const", t, x, fields, np.zeros((n, n), bool), {}, {})


@pytest.mark.parametrize("eq", [EquationSpec("burgers", 0.7, 0.6, a=1.3, b=0.9),
                                EquationSpec("mburgers", 0.5, 1.0, a=1.0, b=1.0)])
def test_constant_solves_burgers_exactly(eq):
    rep = pde_residual(eq, constant_grid(2.5))
    assert rep.max_abs == 0 and rep.passed


def test_missing_partials():
    with pytest.raises(MissingPartialsError):
        pde_residual(EquationSpec("kdv", 0.7, 0.6), constant_grid(1.0, ("u", "u_t", "u_x")))


def test_report_pass_rule():
    ok = ResidualReport("k", (10, 10), 1e-9, 1e-10, 0, 1e-7)
    assert ok.passed
    assert not ResidualReport("k", (10, 10), 1e-9, 1e-10, 1, 1e-7).passed
    assert not ResidualReport("k", (10, 10), 2e-7, 1e-10, 0, 1e-7).passed
    assert ResidualReport("k", (100, 100), 1e-9, 1e-10, 99, 1e-7).passed
    assert set(ok.to_json()) == {"pipeline", "grid", "max_abs_residual", "mean_abs_residual",
                                 "flagged", "tol", "pass", "config"}


def test_flagged_nodes_are_excluded():
    g = constant_grid(1.0)
    g.fields["u_x"][0, 0] = 1e6
    g.flagged[0, 0] = True
    rep = pde_residual(EquationSpec("burgers", 0.7, 0.6, a=1.0, b=1.0), g)
    assert rep.max_abs == 0 and rep.flagged == 1


def test_mkdv_lift():
    rep = lift_report("mkdv/V3", RunConfig())
    assert rep.shape == (50, 50)
    assert rep.max_abs < 1e-7 and rep.flagged == 0


def test_wrong_prefactor_is_detected():
    rep = lift_report("mkdv/V3", RunConfig(), prefactor="t^(-beta/2)")
    assert rep.max_abs > 1e-2


@pytest.mark.parametrize("key", LIFT_KEYS)
def test_every_lift_passes(key):
    rep = lift_report(key, RunConfig(), LIFT_TOLS.get(key, 1e-7))
    assert rep.passed, rep.to_json()


@pytest.mark.parametrize("key", ["burgers/V4", "kdv/V4/fp2", "mburgers/V3"])
def test_refining_ode_tolerance_does_not_hurt(key):
    coarse = lift_report(key, RunConfig(tol=1e-10), 1.0).max_abs
    fine = lift_report(key, RunConfig(tol=1e-11), 1.0).max_abs
    assert fine <= 2 * coarse


@pytest.mark.parametrize("key", ["mkdv/V3", "burgers/V4", "kdv/V4/fp2"])
def test_grid_independence(key):
    a = lift_report(key, RunConfig(grid_n=50), 1.0).max_abs
    b = lift_report(key, RunConfig(grid_n=100), 1.0).max_abs
    hi, lo = max(a, b), min(a, b)
    assert hi <= 10 * lo or hi < 1e-13


def _w(alpha, gamma):
    ode = s_substitute(make_ode("fp2", {"alpha": alpha, "gamma": gamma}))[0]
    ic = (0.1, 0.0) if gamma else (0.0, 0.0)
    return miura_forward(integrate_ivp(ode, ic, (1e-3, 1.5)))


def test_identity_trivial_case():
    rep = k1_k2_identity_check(_w(0.7, 0.0), 0.0, 0.7)
    assert rep["max_residual"] == 0


@pytest.mark.parametrize("alpha", [0.7, 1.0])
@pytest.mark.parametrize("gamma", [0.0, 1.0])
def test_identity_along_miura_image(alpha, gamma):
    ode = s_substitute(make_ode("fp2", {"alpha": alpha, "gamma": gamma}))[0]
    w = miura_forward(integrate_ivp(ode, (0.1, 0.0), (1e-3, 1.5)))
    assert k1_k2_identity_check(w, gamma, alpha)["max_residual"] < 1e-6


def test_identity_holds_off_shell():
    # the weighted derivative identity is algebraic in W, so any smooth W
    # (here a shifted cosine, which solves neither K1 nor K2) satisfies it
    from confsym.expr import E
    from confsym.odesolve import MappedSolution
    base = integrate_ivp(make_ode("oscillator"), (1.0, 0.0), (0.0, 1.5))
    w = MappedSolution(base, E("Phi + 3"), "W", lambda s: s, lambda s: s)
    rep = k1_k2_identity_check(w, 1.0, 0.7)
    assert rep["max_residual"] < 1e-9 and rep["skipped"] == 0


def test_empty_selection():
    rep = run_suite(RunConfig(), only=())
    assert rep["checks"] == [] and rep["pass"]


def test_loosened_control_fails():
    cfg = RunConfig(pipelines=("mkdv/V3",), control_prefactor="t^(-beta/3)")
    rep = run_suite(cfg, only=("lifts",))
    (check,) = rep["checks"]
    assert not check["pass"]
    control = [r for r in check["detail"] if r.get("negative_control")]
    assert control and not control[0]["pass"]


def test_errors_are_recorded_not_raised(monkeypatch):
    import confsym.verifier as v

    def boom(cfg):
        raise RuntimeError("kaput")

    monkeypatch.setattr(v, "CHECKS", (("rules", boom),))
    rep = v.run_suite(RunConfig())
    assert not rep["pass"] and "kaput" in rep["checks"][0]["detail"]["error"]


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(alpha=0)
    with pytest.raises(ValueError):
        RunConfig(grid_lo=0)
    with pytest.raises(ValueError):
        RunConfig(grid_n=1)


def test_canonical_is_stable():
    obj = {"a": np.float64(0.1 + 0.2), "b": [np.int64(3), np.bool_(True)], "_t": 5.0,
           "c": float("inf")}
    assert canonical(obj) == {"a": 0.3, "b": [3, True], "c": "inf"}


def test_default_suite_passes():
    rep = run_suite(RunConfig())
    assert [c["name"] for c in rep["checks"]] == [
        "conformable_rules", "symmetry_criterion", "lie_algebras", "reductions",
        "lift_residuals", "k1_k2_identity", "scale_maps", "p34_report"]
    assert len(CHECKS) == 8
    assert rep["pass"], [c["name"] for c in rep["checks"] if not c["pass"]]
    assert rep["_elapsed_seconds"] < 60
