import json
import subprocess
import sys
from fractions import Fraction

import pytest

from residue_engine.cli import JobSpec, main, run
from residue_engine.model_io import model_from_json, resolve_model


def cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pair_example(capsys):
    code, out, _ = cli(capsys, "pair", "--model", "p1pow:3", "--class", "1")
    assert code == 0 and out.strip() == "1"


def test_residue_example(capsys):
    code, out, _ = cli(capsys, "residue", "--betas", "e1,e2,e1+e2", "--lambda", "3,1")
    assert code == 0 and out.strip() == "i"
    code, out, _ = cli(capsys, "residue", "--betas", "1,0;0,1;1,1", "--lambda", "1,3", "--method", "h")
    assert code == 0 and out.strip() == "i"


def test_verify_example(capsys):
    code, out, _ = cli(capsys, "verify", "--model", "projN:5")
    lines = out.strip().splitlines()
    assert code == 0 and lines[-1] == "PASS"
    assert len(lines) > 1 and all(line.endswith(": 0") for line in lines[:-1])


def test_verify_p1_power(capsys):
    code, out, _ = cli(capsys, "verify", "--model", "p1pow:5")
    assert code == 0 and out.strip().endswith("PASS")


def test_pair_with_class_and_order(capsys):
    code, out, _ = cli(capsys, "pair", "--model", "p1pow:5", "--order", "2")
    assert code == 0 and out.strip() == "3/2*eps - 5/2"
    code, out, _ = cli(capsys, "pair", "--model", "projN:5", "--class", "xi^2")
    assert code == 0
    code, out, _ = cli(capsys, "pair", "--model", "su3demo")
    assert code == 0 and out.strip() == "i"


def test_json_mirrors_text(capsys):
    code, out, _ = cli(capsys, "pair", "--model", "p1pow:3", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["value"] == "1" and data["model"] == "p1pow:3"


def test_dh_and_critical_output(capsys):
    code, out, _ = cli(capsys, "dh", "--model", "p1pow:3")
    assert code == 0
    assert out.strip().splitlines()[1] == "(-1, 1) : -y1^2 + 3"
    code, out, _ = cli(capsys, "critical", "--model", "projN:5")
    assert code == 0 and [line.split()[0] for line in out.strip().splitlines()] == ["0", "1", "3", "5"]
    code, out, _ = cli(capsys, "dh", "--model", "su3demo", "--format", "json")
    pieces = json.loads(out)["pieces"]
    def numeric(p):
        return ([[Fraction(x) for x in g] for g in p["generators"]], [Fraction(x) for x in p["apex"]])

    assert pieces == sorted(pieces, key=numeric)


def test_witten_output(capsys):
    code, out, _ = cli(capsys, "witten", "--model", "p1pow:3", "--epsilon", "0.2,0.1")
    assert code == 0 and "fitted slope" in out


@pytest.mark.parametrize(
    "argv,code",
    [
        (["pair", "--model", "p1pow:4"], 2),
        (["pair", "--model", "p1pow:3", "--class", "xi1 +"], 3),
        (["residue", "--betas", "e1,e2,e1+e2", "--lambda", "2,2"], 4),
        (["residue", "--betas", "e1-e2,e2", "--lambda", "2,1"], 4),
        (["pair", "--model", "no/such/file.json"], 1),
        (["witten", "--model", "p1pow:3", "--epsilon", "a,b"], 3),
        (["verify", "--model", "su3demo"], 3),
    ],
)
def test_exit_codes(capsys, argv, code):
    got, out, err = cli(capsys, *argv)
    assert got == code
    if code:
        assert "error" in err


def test_error_names_hypothesis(capsys):
    _, _, err = cli(capsys, "pair", "--model", "p1pow:4")
    assert "regular value" in err


def test_export_round_trips(capsys, tmp_path):
    code, out, _ = cli(capsys, "export", "--model", "projN:3")
    assert code == 0
    assert model_from_json(out) == resolve_model("projN:3")
    path = tmp_path / "m.json"
    path.write_text(out)
    code, out2, _ = cli(capsys, "pair", "--model", str(path))
    assert code == 0 and out2.strip() == "1/48"


def test_run_reports_without_raising():
    report = run(JobSpec(command="pair", model="p1pow:3"))
    assert report.code == 0 and report.text == "1"
    assert run(JobSpec(command="nope")).code == 3


def test_output_is_byte_identical_across_processes():
    argv = [sys.executable, "-m", "residue_engine", "dh", "--model", "su3demo"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True, env={"PYTHONHASHSEED": "123", "PATH": ""}).stdout
    assert a == b and a
