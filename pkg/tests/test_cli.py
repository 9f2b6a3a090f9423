import json
import subprocess
import sys

import pytest

from duocalc import theory_to_json
from duocalc.cli import main

from worked_circuits import MEDIUM, TRIPTYCH, spin_theory, theory_for


@pytest.fixture
def spin_file(tmp_path):
    path = tmp_path / "spin.json"
    path.write_text(json.dumps(theory_to_json(spin_theory(0.6))))
    return str(path)


@pytest.fixture
def medium_file(tmp_path, rng):
    path = tmp_path / "medium.json"
    path.write_text(json.dumps(theory_to_json(theory_for(MEDIUM, "classical", rng))))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", MEDIUM)
    assert code == 0 and json.loads(out)["valid"] is True
    code, out, _ = run(capsys, "validate", "A^{a1} B_{a1}^{a2}")
    doc = json.loads(out)
    assert code == 0 and doc["open_ports"] == ["B#1.out0"]


def test_prob_and_foliate(capsys, medium_file):
    code, out, _ = run(capsys, "--theory", medium_file, "prob", MEDIUM, "--foliate")
    doc = json.loads(out)
    assert code == 0 and 0 <= doc["probability"] <= 1 and doc["padding_count"] == 2
    code, out2, _ = run(capsys, "foliate", MEDIUM, "--theory", medium_file)
    doc2 = json.loads(out2)
    assert code == 0 and doc2["sizes"] == [4, 3, 2] and doc2["problems"] == []
    assert abs(doc2["probability"] - doc["probability"]) < 1e-12
    code, out3, _ = run(capsys, "foliate", MEDIUM)
    assert code == 0 and "probability" not in json.loads(out3)


def test_fragment_colors(capsys, spin_file):
    code, out, _ = run(capsys, "fragment", "C[+]_{a1}^{a2}", "--theory", spin_file)
    doc = json.loads(out)
    assert code == 0 and [i["color"] for i in doc["indices"]] == ["black", "white"]
    code, out, _ = run(capsys, "fragment", "C[+]_{a1}^{a2}", "--theory", spin_file, "--colors", "wb")
    assert code == 0 and [i["color"] for i in json.loads(out)["indices"]] == ["white", "black"]
    code, _, err = run(capsys, "fragment", "C[+]_{a1}^{a2}", "--theory", spin_file, "--colors", "w")
    assert code == 2 and "--colors" in err
    code, _, _ = run(capsys, "fragment", "C[+]_{a1}^{a2}", "--theory", spin_file, "--colors", "wq")
    assert code == 2


def test_ratio(capsys, spin_file):
    code, out, _ = run(capsys, "ratio", *TRIPTYCH[1], "--theory", spin_file)
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "well_conditioned"
    assert abs(doc["k"] - 0.9126678074548392) < 1e-9
    code, out, _ = run(capsys, "ratio", *TRIPTYCH[0], "--theory", spin_file)
    assert json.loads(out)["verdict"] == "not_well_conditioned"


def test_dot(capsys, tmp_path):
    src = tmp_path / "medium.circuit"
    src.write_text(MEDIUM + "\n")
    code, out, _ = run(capsys, "dot", str(src), "--foliate")
    assert code == 0 and out.startswith("digraph") and "rank=same" in out


def test_json_circuit_file(capsys, tmp_path):
    from duocalc import circuit_to_json, parse

    path = tmp_path / "c.json"
    path.write_text(json.dumps(circuit_to_json(parse(MEDIUM))))
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 0 and json.loads(out)["wires"] == 7


def test_domain_errors_exit_one(capsys, spin_file, tmp_path):
    code, _, err = run(capsys, "validate", "A^{a1} B^{a1}")
    doc = json.loads(err)
    assert code == 1 and doc["error"] == "DuplicateProducer" and doc["col"] == 11
    code, _, err = run(capsys, "prob", "A^{a1}", "--theory", spin_file)
    assert code == 1 and json.loads(err)["error"] == "InvalidCircuit"
    code, _, err = run(capsys, "prob", "A^{a1} B_{a1}", "--theory", str(tmp_path / "missing.json"))
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"
    code, _, err = run(capsys, "ratio", "A^{a1}", "A^{a1} C_{a1}^{a2}", "--theory", spin_file)
    assert code == 1 and json.loads(err)["error"] == "NotSameExperiment"


def test_usage_errors_exit_two(capsys):
    code, _, err = run(capsys, "prob", "A^{a1} B_{a1}")
    assert code == 2 and "--theory" in err
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_console_module_runs(spin_file):
    proc = subprocess.run([sys.executable, "-m", "duocalc", "validate", "A^{a1} B_{a1}"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["valid"] is True
