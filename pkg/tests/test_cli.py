import json
from pathlib import Path

import pytest

from dirinf.cli import main

INPUTS = Path(__file__).resolve().parent.parent / "demos" / "inputs"
FAST = ["--rungs", "6"]


def _run(argv, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out.read_text() if out.exists() else None


def _write(tmp_path, doc, name="in.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def test_asymcone(tmp_path):
    code, text = _run(["asymcone", "--input", str(INPUTS / "cone.json")], tmp_path)
    doc = json.loads(text)
    assert code == 0 and not doc["is_zero"]
    assert len(doc["cone"]["generators"]) == 2


def test_asymcone_csv(tmp_path):
    code, text = _run(["asymcone", "--input", str(INPUTS / "cone.json"), "--format", "csv"], tmp_path)
    lines = text.splitlines()
    assert code == 0 and lines[0] == "label,piece,kind,x0,x1" and len(lines) == 3


def test_ncone_inf(tmp_path):
    code, text = _run(["ncone-inf", "--input", str(INPUTS / "cone.json"), "--direction", "2,1"], tmp_path)
    doc = json.loads(text)
    assert code == 0 and doc["direction"] == pytest.approx([0.894427191, 0.4472135955])
    code, text = _run(["ncone-inf", "--input", str(INPUTS / "cone.json"), "--grid", "8"], tmp_path)
    doc = json.loads(text)
    assert code == 0 and doc["sweep"] and not doc["cone"]["empty"]


def test_subdiff_inf(tmp_path):
    code, text = _run(["subdiff-inf", "--input", str(INPUTS / "valley.json"), "--direction", "0,1"] + FAST,
                      tmp_path)
    doc = json.loads(text)
    assert code == 0 and doc["command"] == "subdiff-inf" and doc["params"]["K"] == 6
    code, text = _run(["subdiff-inf", "--input", str(INPUTS / "valley.json"), "--direction", "0,1",
                       "--format", "csv"] + FAST, tmp_path)
    assert text.splitlines()[0] == "family,rung,t,x0,x1,g0,g1,log_scale"


def test_certify_optimality_and_ray(tmp_path):
    src = str(INPUTS / "valley_on_line.json")
    code, text = _run(["certify", "optimality", "--input", src, "--direction", "0,1"] + FAST, tmp_path)
    assert code == 4 and json.loads(text)["status"] == "Fails"
    code, text = _run(["certify", "ray", "--input", str(INPUTS / "no_minimizer.json"),
                       "--direction", "1,0"] + FAST, tmp_path)
    assert code == 0 and json.loads(text)["status"] == "Holds"


def test_certify_existence_failure_exit_code(tmp_path):
    code, text = _run(["certify", "existence", "--input", str(INPUTS / "no_minimizer.json"),
                       "--grid", "8"] + FAST, tmp_path)
    doc = json.loads(text)
    assert code == 4 and doc["status"] == "Fails"
    assert [0.0, -1.0] in doc["oracle"]["witness_directions"]


def test_certify_csv(tmp_path):
    code, text = _run(["certify", "optimality", "--input", str(INPUTS / "valley_on_line.json"),
                       "--direction", "0,1", "--format", "csv"] + FAST, tmp_path)
    assert text.splitlines()[0] == "u,qualification,condition,direct,route,excluded,stability"


@pytest.mark.parametrize("doc,argv", [
    ({"polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}}, ["asymcone"]),
    ({"schema": 2, "polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}}, ["asymcone"]),
    ({"schema": 1, "polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}, "extra": 1}, ["asymcone"]),
    ({"schema": 1, "polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}}, ["ncone-inf", "--direction", "1,x"]),
    ({"schema": 1, "polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}}, ["ncone-inf", "--direction", "0,0"]),
    ({"schema": 1, "polyhedron": {"A": [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]],
                                  "b": [1.0, 1.0, 1.0, 1.0]}}, ["ncone-inf"]),
    ({"schema": 1, "function": {"norm": {"n": 2}}, "params": {"bogus": 1}}, ["subdiff-inf", "--direction", "1,0"]),
    ({"schema": 1, "function": {"norm": {"n": 2}}}, ["subdiff-inf"]),
    ("{not json", ["asymcone"]),
])
def test_input_errors_exit_2(tmp_path, capsys, doc, argv):
    path = _write(tmp_path, doc)
    code, _ = _run(argv + ["--input", path], tmp_path)
    assert code == 2
    assert "input error" in capsys.readouterr().err


def test_directional_cone_of_non_recession_direction_is_empty(tmp_path):
    doc = {"schema": 1, "polyhedron": {"A": [[1.0, 0.0]], "b": [0.0]}}
    code, text = _run(["ncone-inf", "--input", _write(tmp_path, doc), "--direction", "1,0"], tmp_path)
    assert code == 0 and json.loads(text)["cone"]["empty"]


def test_missing_input_file(tmp_path):
    code, _ = _run(["asymcone", "--input", str(tmp_path / "absent.json")], tmp_path)
    assert code == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["certify", "nonsense", "--input", "x.json"])
    assert info.value.code == 2


def test_numerical_failure_exit_3(tmp_path, capsys):
    # the domain x1 <= 0 never reaches infinity along (1, 0)
    doc = {"schema": 1, "function": {"indicator": {"A": [[1.0, 0.0]], "b": [0.0]}}}
    code, _ = _run(["subdiff-inf", "--input", _write(tmp_path, doc), "--direction", "1,0"] + FAST,
                   tmp_path)
    assert code == 3 and "numerical failure" in capsys.readouterr().err


def test_stdout_when_no_out(capsys):
    assert main(["asymcone", "--input", str(INPUTS / "cone.json")]) == 0
    assert json.loads(capsys.readouterr().out)["command"] == "asymcone"
