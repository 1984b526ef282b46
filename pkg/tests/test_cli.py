import json
import subprocess
import sys

import numpy as np
import pytest

from eulerlab import io
from eulerlab.cli import main

import vtk_grammar


def run_cli(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cases(capsys):
    code, out, _ = run_cli(capsys, "cases")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 5
    assert "c1 = 0, c2 = 0" in lines[0] and "c1 = 1" in lines[2] and "c1 = 2" in lines[3]
    assert "c1 not in {0, 1, 2}" in lines[4]
    code, out, _ = run_cli(capsys, "cases", "--json")
    assert [r["tag"] for r in json.loads(out)][1] == "Case2_c1_0_c2_nonzero"


def test_residual_case4_default_tolerance(capsys):
    code, out, _ = run_cli(capsys, "residual", "--c1", "2", "--c2", "1")
    assert code == 0 and "PASS" in out


def test_residual_json_keys(capsys):
    code, out, _ = run_cli(capsys, "residual", "--case", "5", "--json")
    d = json.loads(out)
    assert code == 0
    assert {"max_abs", "l2", "worst_point", "skipped"} <= set(d)
    assert d["max_abs"] < 1e-10 and len(d["worst_point"]) == 3


def test_residual_fails_tolerance(capsys):
    code, out, _ = run_cli(capsys, "residual", "--case", "1", "--method", "fd", "--fd-h", "0.2", "--tol", "1e-12")
    assert code == 3 and "FAIL" in out


def test_residual_skip(capsys):
    args = ["residual", "--case", "4", "--x-min", "-1", "--x-max", "0", "--y-min", "-1", "--y-max", "0"]
    code, _, err = run_cli(capsys, *args)
    assert code == 2 and "outside the domain" in err
    code, out, _ = run_cli(capsys, *args, "--allow-skip", "--json")
    assert code == 0 and json.loads(out)["skipped"] == 42


def test_sample_pole(capsys):
    code, _, err = run_cli(capsys, "sample", "--c1", "2", "--c2", "0", "--t", "0")
    assert code == 2 and err


def test_sample_csv_and_vtk(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "sample", "--c1", "1", "--c2", "0", "--c3", "1", "--nx", "32", "--ny", "32",
                         "--x-min", "0", "--x-max", "1", "--y-min", "0", "--y-max", "1", "--t", "0",
                         "--out", str(tmp_path / "s.csv"), "--vtk", str(tmp_path / "s.vtk"))
    assert code == 0
    rec = io.read_csv(tmp_path / "s.csv")
    assert len(rec) == 1024
    doc = vtk_grammar.parse((tmp_path / "s.vtk").read_text())
    assert doc["dimensions"] == (32, 32, 1)


def test_sample_stdout(capsys):
    code, out, _ = run_cli(capsys, "sample", "--case", "1", "--nx", "2", "--ny", "2", "--x-min", "0",
                           "--x-max", "1", "--y-min", "0", "--y-max", "1")
    assert code == 0 and len(out.strip().splitlines()) == 5


def test_usage_errors(capsys):
    assert run_cli(capsys, "sample", "--case", "1", "--nx", "1")[0] == 1  # empty lattice
    assert run_cli(capsys, "nonsense")[0] == 1
    assert run_cli(capsys, "residual")[0] == 1  # no parameters
    assert run_cli(capsys, "residual", "--c1", "2")[0] == 1
    assert run_cli(capsys, "residual", "--c1", "2", "--c2", "1", "--case", "3")[0] == 1
    assert run_cli(capsys, "residual", "--c1", "x", "--c2", "1")[0] == 1


def test_constraints_seeded(capsys):
    a = run_cli(capsys, "constraints", "--case", "4", "--seed", "7", "--json")
    b = run_cli(capsys, "constraints", "--case", "4", "--seed", "7", "--json")
    assert a[0] == 0 and a[1] == b[1]
    d = json.loads(a[1])
    assert d["n_points"] == 200 and len(d["per_constraint"]) == 18


def test_verify_reduction(capsys):
    code, out, _ = run_cli(capsys, "verify-reduction", "--case", "5", "--amplitude", "2", "--json")
    d = json.loads(out)
    assert code == 0 and d["max_abs"] < 1e-6 and d["amplitude"] == 2


def test_verify_reduction_singular(capsys):
    code, _, err = run_cli(capsys, "verify-reduction", "--c1", "0", "--c2", "0")
    assert code == 2 and "singular" in err


def test_evolve_and_dump(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "evolve", "--case", "3", "--c3", "1", "--nx", "16", "--json",
                           "--dump-dir", str(tmp_path), "--dump-format", "vtk", "--dump-every", "4")
    d = json.loads(out)
    assert code == 0 and d["max_div"] < 1e-8
    files = sorted(tmp_path.glob("*.vtk"))
    assert files[0].name == "step_000000.vtk" and len(files) == 1 + d["steps"] // 4
    vtk_grammar.parse(files[-1].read_text())


def test_evolve_non_convergence(capsys):
    code, _, err = run_cli(capsys, "evolve", "--c1", "0", "--c2", "0", "--t0", "1", "--t1", "1.1",
                           "--nx", "16", "--poisson-max-iter", "10")
    assert code == 4 and "did not converge" in err


def test_evolve_study_flags_loose_poisson(capsys):
    base = ["evolve", "--c1", "1", "--c2", "0", "--c3", "1", "--resolutions", "16", "24", "32"]
    assert run_cli(capsys, *base)[0] == 0
    assert run_cli(capsys, *base, "--poisson-tol", "1e-6")[0] == 3


def test_errata(capsys):
    code, out, _ = run_cli(capsys, "errata", "--case", "5")
    d = json.loads(out)
    assert code == 0 and d["match"] is False and d["printed_undefined"] == 0
    code, out, _ = run_cli(capsys, "errata", "--case", "4")
    assert json.loads(out)["match"] is True


def test_params_file(capsys, tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# case 5\nc1 = 3\nc2=1\nnx=5\nny=5\n")
    code, out, _ = run_cli(capsys, "--params-file", str(f), "residual", "--json")
    d = json.loads(out)
    assert code == 0 and d["case"] == "Case5_general" and d["n_points"] == 125
    # explicit flags override the file
    code, out, _ = run_cli(capsys, "--params-file", str(f), "residual", "--nx", "3", "--json")
    assert json.loads(out)["n_points"] == 75
    f.write_text("c1\n")
    assert run_cli(capsys, "--params-file", str(f), "residual")[0] == 1


def test_identical_runs_identical_files(capsys, tmp_path):
    for name in ("a", "b"):
        run_cli(capsys, "sample", "--case", "2", "--nt", "3", "--t-min", "1", "--t-max", "2",
                "--out", str(tmp_path / f"{name}.csv"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "eulerlab.cli", "cases"], capture_output=True, text=True)
    assert r.returncode == 0 and "Case5_general" in r.stdout
