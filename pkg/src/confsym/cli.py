"""Command line entry point.

Every subcommand prints one JSON report and, with ``--out``, writes it (and
CSV tables when asked) into that directory. Exit status is 0 when all checks
pass, 1 when a check fails and 2 for usage or domain errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import conformable, reductions, symmetry, verifier
from .equations import (EQUATION_IDS, FAMILY_CONSTANTS, EquationSpec, basis_fields,
                        specialize_family)
from .expr.numeric import ZERO_TEST_SEED
from .odes import ODE_NAMES, make_ode
from .odesolve import integrate_ivp, residual_of_ode, s_substitute, tabulate
from .schema import validate

DEFAULTS = {
    "eq": "kdv", "pipeline": "mkdv/V3", "ode": "fp2",
    "alpha": 0.7, "beta": 0.6, "a": None, "b": None, "gamma": None, "mu": None,
    "sigma": -1.0 / 6.0, "seed": ZERO_TEST_SEED, "tol": 1e-12, "residual_tol": None,
    "grid": [0.5, 2.0, 50], "out": None, "format": "json",
    "ic": None, "span": None, "s0": None, "samples": 201, "checks": None,
    "control_prefactor": None,
}


class UsageError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with default values for any flag")
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--a", type=float, default=S)
    p.add_argument("--b", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--mu", type=float, default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--seed", type=_seed, default=S, help="default 0xC0FFEE or $CONFSYM_SEED")
    p.add_argument("--tol", type=float, default=S, help="ODE integration tolerance")
    p.add_argument("--grid", type=_floats, default=S, help="lo,hi,n for both t and x")
    p.add_argument("--out", default=S, help="directory for written reports")
    p.add_argument("--format", choices=("json", "csv", "both"), default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confsym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("rules-check", help="numeric check of the conformable calculus rules")
    _common(p)

    for name, help_ in (("symmetries", "symmetry criterion for the basis fields"),
                        ("commutators", "structure constants and Jacobi identity")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--eq", choices=EQUATION_IDS, default=S)

    for name, help_ in (("reduce", "substitute a similarity form and compare"),
                        ("lift", "lift a reduced solution to a (t, x) grid"),
                        ("residual", "PDE residual of a lifted solution")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--pipeline", default=S, help=f"one of {sorted(reductions.PIPELINES)}")
        if name != "reduce":
            p.add_argument("--residual-tol", dest="residual_tol", type=float, default=S)

    p = sub.add_parser("solve", help="integrate one of the named ODEs")
    _common(p)
    p.add_argument("--ode", choices=ODE_NAMES, default=S)
    p.add_argument("--ic", type=_floats, default=S)
    p.add_argument("--span", type=_floats, default=S)
    p.add_argument("--s0", type=float, default=S)
    p.add_argument("--samples", type=int, default=S)

    p = sub.add_parser("identity", help="K1/K2 identity and Miura round trip")
    _common(p)

    p = sub.add_parser("suite", help="run every acceptance check")
    _common(p)
    p.add_argument("--checks", type=lambda s: [c for c in s.split(",") if c], default=S,
                   help="comma-separated subset of " + ",".join(n for n, _ in verifier.CHECKS))
    p.add_argument("--control-prefactor", dest="control_prefactor", default=S,
                   help="prefactor for the lift negative control (default: a wrong one)")
    return parser


def resolve_config(ns: argparse.Namespace, environ=os.environ) -> dict:
    """Defaults, then ``$CONFSYM_SEED``, then the config file, then flags."""
    cfg = dict(DEFAULTS)
    if "CONFSYM_SEED" in environ:
        try:
            cfg["seed"] = int(environ["CONFSYM_SEED"], 0)
        except ValueError:
            raise UsageError(f"CONFSYM_SEED is not an integer: {environ['CONFSYM_SEED']!r}")
    flags = vars(ns).copy()
    command = flags.pop("command")
    path = flags.pop("config", None)
    if path is not None:
        with open(path) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys {unknown}")
        cfg.update(loaded)
    cfg.update(flags)
    cfg["command"] = command
    for name in ("alpha", "beta"):
        if not 0 < float(cfg[name]) <= 1:
            raise UsageError(f"{name} must lie in (0, 1]")
    if len(cfg["grid"]) != 3:
        raise UsageError("grid takes lo,hi,n")
    return cfg


def _run_config(cfg: dict) -> verifier.RunConfig:
    lo, hi, n = cfg["grid"]
    return verifier.RunConfig(alpha=cfg["alpha"], beta=cfg["beta"], a=cfg["a"], b=cfg["b"],
                              gamma=cfg["gamma"], mu=cfg["mu"], sigma=cfg["sigma"],
                              seed=cfg["seed"], tol=cfg["tol"], grid_lo=lo, grid_hi=hi,
                              grid_n=int(n), control_prefactor=cfg["control_prefactor"])


def _eq_kwargs(cfg: dict) -> dict:
    if cfg["eq"] in ("burgers", "mburgers"):
        return {"a": 1.0 if cfg["a"] is None else cfg["a"],
                "b": 1.0 if cfg["b"] is None else cfg["b"]}
    return {}


# ---------------------------------------------------------------------------
# subcommands; each returns (result, passed, tables)


def cmd_rules_check(cfg):
    reps = conformable.check_rules(cfg["alpha"])
    worked = conformable.worked_example()
    rules = [r.to_json() for r in reps]
    ok = all(r.passed for r in reps) and worked["abs_error"] < 1e-8
    return {"rules": rules, "worked_example": worked}, ok, {"rules": rules}


def cmd_symmetries(cfg):
    eq = EquationSpec(cfg["eq"], cfg["alpha"], cfg["beta"], **_eq_kwargs(cfg))
    rows = [symmetry.criterion_sweep(eq, V, seed=cfg["seed"]).to_json()
            for V in basis_fields(eq.id)]
    rng = np.random.default_rng(cfg["seed"])
    consts = {c: float(rng.uniform(-2, 2)) for c in sorted(set(FAMILY_CONSTANTS[eq.id].values()))}
    family = symmetry.criterion_sweep(eq, specialize_family(eq.id, consts), seed=cfg["seed"])
    ok = all(r["pass"] for r in rows) and family.passed
    return ({"eq": eq.id, "fields": rows, "family": {**family.to_json(), "constants": consts}},
            ok, {"fields": rows})


def cmd_commutators(cfg):
    params = {"alpha": cfg["alpha"], "beta": cfg["beta"], **_eq_kwargs(cfg)}
    fields = basis_fields(cfg["eq"])
    table = symmetry.structure_constants(fields, params)
    mism = symmetry.stated_bracket_mismatches(cfg["eq"], table)
    jac = symmetry.jacobi_defects(fields, params)
    rows = [{"bracket": f"[{i},{j}]", **table.coefficients(i, j)}
            for i in table.labels for j in table.labels]
    return ({"eq": cfg["eq"], "table": table.to_json(), "mismatches": mism,
             "jacobi_defects": [list(j) for j in jac]}, not mism and not jac, {"brackets": rows})


def _overrides(cfg) -> dict:
    out = {"alpha": cfg["alpha"], "beta": cfg["beta"]}
    out.update({k: cfg[k] for k in ("a", "b", "gamma", "mu") if cfg[k] is not None})
    return out


def cmd_reduce(cfg):
    key = reductions.get_pipeline(cfg["pipeline"]).key
    rep = reductions.reduce_check(key, _overrides(cfg)).to_json()
    inv = reductions.generator_invariance(key, _overrides(cfg))
    ok = rep["pass"] and inv["zeta_invariant"] and inv["form_invariant"]
    return {"reductions": [rep], "invariance": inv}, ok, {"reductions": [rep]}


def _lift(cfg):
    key = reductions.get_pipeline(cfg["pipeline"]).key
    rc = _run_config(cfg)
    pipe = reductions.get_pipeline(key)
    p = pipe.params(rc.overrides())
    t, x = rc.grid()
    need = reductions.s_range_of_grid(pipe, p, t, x)
    solved = reductions.solve_pipeline(key, p, need, tol=rc.tol)
    grid = reductions.lift(key, solved, t, x)
    tol = cfg["residual_tol"] or verifier.LIFT_TOLS.get(key, 1e-7)
    echo = {k: p.get(k) for k in ("alpha", "beta", "a", "b", "gamma", "mu")}
    echo.update({"seed": rc.seed, "ode_tol": rc.tol})
    rep = verifier.pde_residual(pipe.equation(p), grid, tol, echo)
    return grid, rep


def cmd_lift(cfg):
    grid, rep = _lift(cfg)
    T, X = np.meshgrid(grid.t, grid.x, indexing="ij")
    rows = []
    for idx in np.ndindex(T.shape):
        row = {"t": T[idx], "x": X[idx], "flagged": bool(grid.flagged[idx])}
        row.update({k: v[idx] for k, v in grid.fields.items()})
        rows.append(row)
    return ({"residual": rep.to_json(), "provenance": grid.provenance}, rep.passed,
            {"grid": rows})


def cmd_residual(cfg):
    _, rep = _lift(cfg)
    return rep.to_json(), rep.passed, {"residual": [rep.to_json()]}


def cmd_solve(cfg):
    params = {k: cfg[k] for k in ("alpha", "beta", "a", "b", "gamma", "mu", "sigma")
              if cfg[k] is not None}
    params.setdefault("gamma", 1.0)
    params.setdefault("mu", 1.0)
    params.setdefault("a", 1.0)
    params.setdefault("b", 1.0)
    ode = make_ode(cfg["ode"], params)
    cls, svar = s_substitute(ode)
    ic = cfg["ic"] if cfg["ic"] is not None else ([0.1, 0.0, 0.0][: ode.order])
    span = cfg["span"] if cfg["span"] is not None else [1e-3, 1.5]
    if len(span) != 2:
        raise UsageError("span takes lo,hi")
    sol = integrate_ivp(cls, ic, tuple(span), cfg["s0"], cfg["tol"])
    res = residual_of_ode(cls, sol, relative=True)
    table = tabulate(sol, int(cfg["samples"]))
    rows = [dict(zip(table, vals)) for vals in zip(*table.values())]
    return ({"ode": ode.describe(), "span": list(sol.span), "blowup": sol.blowup,
             "notes": sol.notes, "residual": res, "steps": int(len(sol.nodes) - 1)},
            res < 1e-6 or sol.blowup, {"solution": rows})


def cmd_identity(cfg):
    gamma = 1.0 if cfg["gamma"] is None else cfg["gamma"]
    phi = verifier._fp2_solution(cfg["alpha"], gamma, cfg["tol"])
    w = reductions.miura_forward(phi)
    idr = verifier.k1_k2_identity_check(w, gamma, cfg["alpha"])
    rt = reductions.miura_roundtrip(phi, gamma)
    ok = idr["max_residual"] < 1e-6 and rt["max_error"] < 1e-8
    return {"identity": idr, "roundtrip": rt}, ok, {"identity": [{**idr, **rt}]}


def cmd_suite(cfg):
    only = tuple(cfg["checks"]) if cfg["checks"] is not None else None
    known = {n for n, _ in verifier.CHECKS}
    if only is not None and set(only) - known:
        raise UsageError(f"unknown checks {sorted(set(only) - known)}")
    rep = verifier.run_suite(_run_config(cfg), only)
    rows = [{"check": c["name"], "pass": c["pass"]} for c in rep["checks"]]
    return {"checks": rep["checks"]}, rep["pass"], {"summary": rows}


COMMANDS = {"rules-check": cmd_rules_check, "symmetries": cmd_symmetries,
            "commutators": cmd_commutators, "reduce": cmd_reduce, "solve": cmd_solve,
            "lift": cmd_lift, "residual": cmd_residual, "identity": cmd_identity,
            "suite": cmd_suite}


def _config_echo(cfg: dict) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in ("out", "command")}


def dumps(report: dict) -> str:
    return json.dumps(verifier.canonical(report), sort_keys=True, indent=2) + "\n"


def _write_csv(path: Path, rows: list[dict]) -> None:
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for k, v in r.items()})


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(ns)
        result, passed, tables = COMMANDS[cfg["command"]](cfg)
    except (UsageError, ValueError, KeyError, ZeroDivisionError, OSError,
            json.JSONDecodeError) as exc:
        print(f"confsym: error: {exc}", file=sys.stderr)
        return 2
    report = {"schema_version": verifier.SCHEMA_VERSION, "command": cfg["command"],
              "config": _config_echo(cfg), "pass": bool(passed), "result": result}
    text = dumps(report)
    validate(json.loads(text))
    sys.stdout.write(text)
    if cfg["out"] is not None:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        stem = cfg["command"]
        if cfg["format"] in ("json", "both"):
            (out / f"{stem}.json").write_text(text)
        if cfg["format"] in ("csv", "both"):
            for name, rows in tables.items():
                _write_csv(out / f"{stem}_{name}.csv", rows)
    return 0 if passed else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
