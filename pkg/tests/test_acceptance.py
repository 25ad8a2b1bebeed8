"""The nine acceptance criteria, each at its stated tolerance.

Every test prints one PASS/FAIL line; the same lines are repeated in the
terminal summary under "acceptance criteria".
"""

import json
import math

import numpy as np

from confsym import conformable, reductions, symmetry
from confsym.cli import main
from confsym.equations import (EQUATION_IDS, FAMILY_CONSTANTS, STATED_BRACKETS, EquationSpec,
                               basis_fields, negative_control_field, specialize_family)
from confsym.expr.numeric import ZERO_TEST_SEED
from confsym.odes import make_ode
from confsym.odesolve import integrate_ivp, s_substitute
from confsym.schema import validate
from confsym.verifier import (SCALE_RESIDUAL_FACTOR, RunConfig, k1_k2_identity_check,
                              lift_report)

AB_PAIRS = [(1.0, 1.0), (0.5, 0.5), (0.7, 0.6), (0.9, 0.3)]


def _spec(eq, alpha, beta):
    kw = {"a": 1.5, "b": 0.8} if eq in ("burgers", "mburgers") else {}
    return EquationSpec(eq, alpha, beta, **kw)


def test_criterion_1_conformable_calculus(record):
    assert len(conformable.default_corpus()) == 6 and len(conformable.default_points()) == 20
    worst, failed = 0.0, []
    for alpha in (0.3, 0.5, 0.9, 1.0):
        for rep in conformable.check_rules(alpha):
            worst = max(worst, rep.max_residual)
            if not (rep.passed and rep.max_residual < 1e-6):
                failed.append(f"{rep.rule}@{alpha}")
    worked = conformable.worked_example()["abs_error"]
    ok = not failed and worked < 1e-8
    record("1 conformable calculus", ok,
           f"max rule residual {worst:.2e}; sqrt example error {worked:.1e}; failed {failed}")
    assert ok


def test_criterion_2_symmetry_criterion(record):
    rng = np.random.default_rng(ZERO_TEST_SEED)
    worst, weakest_neg, count, failed = 0.0, math.inf, 0, []
    for eq_id in EQUATION_IDS:
        for alpha, beta in AB_PAIRS:
            eq = _spec(eq_id, alpha, beta)
            fields = list(basis_fields(eq_id))
            consts = {c: float(rng.uniform(-2, 2))
                      for c in sorted(set(FAMILY_CONSTANTS[eq_id].values()))}
            fields.append(specialize_family(eq_id, consts))
            for V in fields:
                st = symmetry.criterion_sweep(eq, V, n=100, tol=1e-8)
                worst = max(worst, st.max_abs)
                count += V.label.startswith("V")
                if not st.passed:
                    failed.append(f"{V.label}@{alpha},{beta}")
            neg = symmetry.criterion_sweep(eq, negative_control_field(eq_id), n=100)
            weakest_neg = min(weakest_neg, neg.max_abs)
    ok = not failed and weakest_neg > 1e-3 and count == 15 * len(AB_PAIRS)
    record("2 symmetry criterion", ok,
           f"max residual {worst:.2e} over {count} basis sweeps + families; "
           f"weakest control {weakest_neg:.2e}; failed {failed}")
    assert ok


def test_criterion_3_lie_algebras(record):
    params = {"alpha": 0.7, "beta": 0.6, "a": 1.5}
    mism, jac = [], []
    for eq_id in EQUATION_IDS:
        fields = basis_fields(eq_id)
        table = symmetry.structure_constants(fields, params)
        mism += symmetry.stated_bracket_mismatches(eq_id, table)
        jac += symmetry.jacobi_defects(fields, params)
    kdv = symmetry.structure_constants(basis_fields("kdv"), params)
    ok = (not mism and not jac and kdv.coefficients("V1", "V3") == {"V2": 6.0}
          and len(STATED_BRACKETS["burgers"]) == 10)
    record("3 Lie algebra tables", ok, f"bracket mismatches {mism}; Jacobi defects {jac}")
    assert ok


def test_criterion_4_reductions(record):
    failed, n = [], 0
    for pipe in reductions.catalog():
        for alpha, beta in AB_PAIRS[:3]:
            rep = reductions.reduce_check(pipe.key, {"alpha": alpha, "beta": beta})
            n += 1
            if not rep.zero:
                failed.append(f"{pipe.key}@{alpha},{beta}")
    ok = n == 21 and not failed
    record("4 reduction correctness", ok, f"{n - len(failed)}/{n} zero-tests pass")
    assert ok


def test_criterion_5_lift_residuals(record):
    cfg = RunConfig(grid_n=50, grid_lo=0.5, grid_hi=2.0)
    parts, ok = [], True
    for key in ("mkdv/V3", "burgers/V4", "burgers/V3+muV1", "kdv/V3+aV1"):
        rep = lift_report(key, cfg, 1e-7)
        ok &= rep.passed and rep.shape == (50, 50)
        parts.append(f"{key} {rep.max_abs:.1e}")
    record("5 lift residuals", ok, "; ".join(parts))
    assert ok


def test_criterion_6_identity_and_roundtrip(record):
    worst_id, worst_rt, ok = 0.0, 0.0, True
    for alpha in (0.7, 1.0):
        for gamma in (0.0, 1.0):
            ode = s_substitute(make_ode("fp2", {"alpha": alpha, "gamma": gamma}))[0]
            phi = integrate_ivp(ode, (0.1, 0.0), (1e-3, 1.5))
            w = reductions.miura_forward(phi)
            idr = k1_k2_identity_check(w, gamma, alpha)["max_residual"]
            rt = reductions.miura_roundtrip(phi, gamma)["max_error"]
            worst_id, worst_rt = max(worst_id, idr), max(worst_rt, rt)
            ok &= idr < 1e-6 and rt < 1e-8
    record("6 K1/K2 identity and Miura round trip", ok,
           f"identity {worst_id:.1e}; round trip {worst_rt:.1e}")
    assert ok


def test_criterion_7_scale_maps(record):
    tol = 1e-12
    p = {"alpha": 0.7, "beta": 0.6, "gamma": 1.0, "a": 6.0, "b": 1.0}
    worst_rt, worst_res, ok = 0.0, 0.0, True
    for name in ("kdv_scaling", "mkdv_scaling2", "kdv_galilean2", "mburgers_scaling"):
        chk = reductions.scale_to_canonical(name, p).check()
        sol = reductions.scale_solution_check(name, p, tol)
        worst_rt = max(worst_rt, sol["roundtrip"])
        worst_res = max(worst_res, sol["target_residual"], sol["source_residual"])
        ok &= chk["zero"] and sol["roundtrip"] < 1e-12
        ok &= max(sol["target_residual"], sol["source_residual"]) < SCALE_RESIDUAL_FACTOR * tol
    mu = reductions.scale_to_canonical("mkdv_scaling2", dict(p, beta=1.0)).target_params["mu"]
    ok &= abs(mu - 3 * p["gamma"]) < 1e-15
    record("7 scale maps", ok,
           f"round trip {worst_rt:.1e}; mapped relative residual {worst_res:.1e} "
           f"(ODE tol {tol:g}); mu at beta=1 is {mu:g}")
    assert ok


def test_criterion_8_p34_report(record):
    parts, ok = [], True
    for gamma in (0.0, 1.0):
        ode = s_substitute(make_ode("fp2", {"alpha": 0.7, "gamma": gamma}))[0]
        w = reductions.miura_forward(integrate_ivp(ode, (0.1, 0.0), (1e-3, 1.5)))
        rep = reductions.p34_report(w, gamma, 0.7)
        ok &= rep.finite and math.isfinite(rep.max_residual)
        parts.append(f"gamma={gamma:g}: max {rep.max_residual:.3g}, mean {rep.mean_residual:.3g}")
    record("8 P34 report", ok, "; ".join(parts))
    assert ok


def test_criterion_9_determinism_and_schema(record, tmp_path, capsys):
    texts = []
    for run in ("a", "b"):
        code = main(["suite", "--out", str(tmp_path / run)])
        capsys.readouterr()
        assert code == 0
        texts.append((tmp_path / run / "suite.json").read_bytes())
    identical = texts[0] == texts[1]
    validate(json.loads(texts[0]))
    argvs = [["rules-check"], ["symmetries", "--eq", "mburgers"], ["commutators", "--eq", "mkdv"],
             ["reduce", "--pipeline", "kdv/V4"], ["solve", "--ode", "k1", "--ic", "0.1,0,0"],
             ["lift", "--pipeline", "burgers/V4", "--grid", "0.5,2,8"],
             ["residual", "--pipeline", "mburgers/V3"], ["identity"]]
    for argv in argvs:
        main(argv + ["--out", str(tmp_path / "each")])
        capsys.readouterr()
        validate(json.loads((tmp_path / "each" / f"{argv[0]}.json").read_text()))
    ok = identical
    record("9 determinism and schema", ok,
           f"suite JSON byte-identical: {identical}; {len(argvs) + 1} reports validated")
    assert ok
