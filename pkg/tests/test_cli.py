import csv
import json
import subprocess
import sys

import pytest

from confsym.cli import build_parser, main, resolve_config
from confsym.schema import validate


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_symmetries_kdv(capsys):
    code, rep = run(["symmetries", "--eq", "kdv", "--alpha", "0.7", "--beta", "0.6"], capsys)
    assert code == 0 and rep["pass"]
    fields = rep["result"]["fields"]
    assert len(fields) == 4
    assert all(f["max_abs_residual"] < 1e-8 for f in fields)


def test_commutators_burgers(capsys):
    code, rep = run(["commutators", "--eq", "burgers"], capsys)
    assert code == 0
    table = rep["result"]["table"]
    assert len(table["basis"]) == 5
    br = table["brackets"]
    assert br[0][4] == {"V4": -1.0}
    for i in range(5):
        assert br[i][i] == {}
        for j in range(5):
            assert br[i][j] == {k: -v for k, v in br[j][i].items()}


@pytest.mark.parametrize("argv", [
    ["rules-check", "--alpha", "0.5"],
    ["reduce", "--pipeline", "burgers/V4"],
    ["solve", "--ode", "fp2"],
    ["lift", "--pipeline", "mkdv/V3", "--grid", "0.5,2,10"],
    ["residual", "--pipeline", "burgers/V3+muV1"],
    ["identity", "--gamma", "0"],
    ["suite", "--checks", "algebras,scale_maps"],
])
def test_subcommands_pass_and_validate(argv, capsys):
    code, rep = run(argv, capsys)
    assert code == 0 and rep["pass"]
    validate(rep)
    assert rep["command"] == argv[0]


def test_failure_exit_code(capsys):
    code, rep = run(["suite", "--checks", "lifts", "--control-prefactor", "t^(-beta/3)"], capsys)
    assert code == 1 and not rep["pass"]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["symmetries", "--eq", "heat"],
    ["symmetries", "--no-such-flag"],
    ["symmetries", "--alpha", "1.5"],
    ["reduce", "--pipeline", "kdv/V9"],
    ["suite", "--checks", "nothing"],
    ["solve", "--span", "1,2,3"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_painleve_blowup_is_reported(capsys):
    code, rep = run(["solve", "--ode", "p1", "--ic", "0,0", "--span", "0,3"], capsys)
    assert code == 0 and rep["result"]["blowup"]
    assert rep["result"]["span"][1] < 3


def test_outputs_are_byte_identical(tmp_path, capsys):
    outs = []
    for name in ("one", "two"):
        d = tmp_path / name
        assert main(["suite", "--checks", "algebras,identity,p34", "--out", str(d),
                     "--format", "both"]) == 0
        capsys.readouterr()
        outs.append(d)
    for f in ("suite.json", "suite_summary.csv"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_csv_tables(tmp_path, capsys):
    assert main(["solve", "--ode", "oscillator", "--ic", "1,0", "--span", "0,1",
                 "--samples", "11", "--out", str(tmp_path), "--format", "csv"]) == 0
    capsys.readouterr()
    assert not (tmp_path / "solve.json").exists()
    with open(tmp_path / "solve_solution.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 11 and set(rows[0]) == {"s", "value", "derivative"}
    assert float(rows[-1]["value"]) == pytest.approx(0.5403023058681398, abs=1e-10)


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"alpha": 0.4, "beta": 0.9, "seed": 7}))
    p = build_parser()
    got = resolve_config(p.parse_args(["symmetries", "--config", str(cfg_file),
                                       "--beta", "0.5"]), environ={"CONFSYM_SEED": "11"})
    assert got["alpha"] == 0.4 and got["beta"] == 0.5 and got["seed"] == 7
    got = resolve_config(p.parse_args(["symmetries"]), environ={"CONFSYM_SEED": "0x10"})
    assert got["seed"] == 16 and got["alpha"] == 0.7
    got = resolve_config(p.parse_args(["symmetries", "--seed", "3"]),
                         environ={"CONFSYM_SEED": "11"})
    assert got["seed"] == 3
    assert resolve_config(p.parse_args(["symmetries"]), environ={})["seed"] == 0xC0FFEE


def test_bad_config_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "blue"}))
    assert main(["symmetries", "--config", str(bad)]) == 2
    assert main(["symmetries", "--config", str(tmp_path / "missing.json")]) == 2


def test_seed_changes_family_constants(capsys):
    _, a = run(["symmetries", "--eq", "mkdv", "--seed", "1"], capsys)
    _, b = run(["symmetries", "--eq", "mkdv", "--seed", "2"], capsys)
    assert a["result"]["family"]["constants"] != b["result"]["family"]["constants"]
    assert a["config"]["seed"] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "confsym", "commutators", "--eq", "mkdv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["mismatches"] == []
