import json
import subprocess
import sys

import pytest

from hypergroup_lab.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv,code", [
    (["finite", "gks", "--hypercube", "3"], 0),
    (["finite", "hgp", "--two-point", "1.0471975511965976", "--x0", "0"], 0),
    (["finite", "gks", "--two-point", "0.5"], 2),
    (["finite", "hadamard", "--sylvester", "3"], 0),
    (["finite", "hadamard", "--paley", "11"], 2),
    (["group", "verify", "--dihedral", "5"], 0),
    (["group", "count-check", "--product", "2,3"], 0),
    (["group", "realify", "--cyclic", "4"], 0),
    (["jacobi", "eigencheck", "-p", "3", "-q", "5", "-k", "6"], 0),
    (["jacobi", "region", "-p", "0.5", "-q", "0.8"], 2),
    (["jacobi", "region", "-p", "3", "-q", "5"], 0),
    (["sl", "bessel-bound", "--area", "1", "--amin", "-2.8"], 0),
    (["sl", "bessel-bound", "--area", "1", "--amin", "-3.0"], 2),
    (["sl", "mass-check", "--density", "uniform"], 0),
])
def test_exit_codes(argv, code, capsys):
    got, out, _ = run(argv, capsys)
    assert got == code
    rec = json.loads(out)
    assert rec["passed"] is (code == 0)
    assert rec["command"] == " ".join(argv[:2])


def test_theta_sweep_transition(capsys):
    code, out, _ = run(["finite", "gks", "--theta-sweep", "8"], capsys)
    assert code == 0
    assert "0.78539816339744828" in out or "0.7853981633974483" in out


def test_bad_input_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["finite", "gks", "--input", str(bad)], capsys)[0] == 1
    assert run(["finite", "gks", "--input", str(tmp_path / "missing.json")], capsys)[0] == 1
    assert run(["finite", "gks"], capsys)[0] == 1
    assert run(["finite", "gks", "--bogus"], capsys)[0] == 1
    assert run(["jacobi", "koornwinder", "-p", "0.5", "-q", "0.8", "-k", "2"], capsys)[0] == 1
    assert run(["group", "build", "--cyclic", "100000"], capsys)[0] == 1


def test_space_file_round_trip(tmp_path, capsys):
    code, out, _ = run(["finite", "dual", "--two-point", "1.0471975511965976"], capsys)
    assert code == 0
    path = tmp_path / "space.json"
    path.write_text(json.dumps(json.loads(out)["dual"]))
    code, out, _ = run(["finite", "gks", "--input", str(path)], capsys)
    assert code == 0 and json.loads(out)["passed"] is True


def test_output_file_and_determinism(tmp_path, capsys):
    argv = ["finite", "gks2-search", "--hypercube", "2", "--trials", "200", "--seed", "5"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(argv + ["--output", str(a)], capsys)[0] == 0
    assert run(argv + ["--output", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_csv_output(capsys):
    code, out, _ = run(["finite", "hgp", "--hypercube", "1", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "i,j,k,value"
    code, out, _ = run(["jacobi", "region", "-p", "3", "-q", "5", "--format", "csv"], capsys)
    assert out.splitlines()[:2] == ["key,value", "passed,True"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "hypergroup_lab", "jacobi", "region",
                          "-p", "3", "-q", "5"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["passed"] is True
