import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from gkmsheaves.cli import data_path, format_polynomial, main

OUTPUT_SCHEMA = json.loads(data_path("output.schema.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    data = json.loads(out)
    jsonschema.validate(data, OUTPUT_SCHEMA)
    return code, data


def test_format_polynomial():
    assert format_polynomial([1, 0, -2, 1]) == "1 - 2t^2 + t^3"
    assert format_polynomial([0, -1]) == "-t"
    assert format_polynomial([]) == "0"


def test_compute_a2(capsys):
    code, data = run_json(capsys, "compute", "--group", "A2")
    assert code == 0
    assert data["total"] == [1, 0, 0, 4, 6, 4, 0, 0, 1]
    assert data["free"] is True
    assert [c["orbit_size"] for c in data["components"]] == [1, 3]


def test_compute_so3_three_slots(capsys):
    code, data = run_json(capsys, "compute", "--group", "SO3", "--g", "3")
    assert code == 0 and data["total"] == [2, 0, 0, 6, 0, 0, 6, 0, 0, 2]


def test_compute_text_and_file_output(capsys, tmp_path):
    target = tmp_path / "out.txt"
    code, out, _ = run(capsys, "compute", "--group", "B2", "--c", "identity", "--format", "text",
                       "--output", str(target))
    assert code == 0 and out == ""
    text = target.read_text()
    assert text.startswith("B2 g=1 c=identity") and "free: yes" in text


def test_compute_selected_characters(capsys):
    code, data = run_json(capsys, "compute", "--group", "A2", "--chars", "01")
    assert [c["character"] for c in data["components"]] == ["01"]


@pytest.mark.parametrize("argv", [
    ["compute", "--group", "E9"],
    ["compute", "--group", "A2", "--c", "z9"],
    ["compute", "--group", "A2", "--chars", "0x"],
    ["verify", "/nonexistent/golden.toml"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "gkm: error" in err


def test_unknown_group_lists_known_keys(capsys):
    _, _, err = run(capsys, "compute", "--group", "E9")
    assert "A2" in err and "G2" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["compute", "--group", "A2", "--g", "0"])
    assert exc.value.code == 2


def test_verify_subset(capsys):
    code, data = run_json(capsys, "verify", "--only", "A2,B2")
    assert code == 0 and data["ok"]
    status = {r["row"]: r["status"] for r in data["rows"]}
    assert status["A2/regular/g=1"] == "match" and status["B2/identity/g=1"] == "match"
    assert status["A3/regular/g=1"] == "skipped"


def test_verify_detects_perturbed_row(capsys, tmp_path):
    text = data_path("golden_tables.toml").read_text()
    text = text.replace("numerator-coefficients = [1, 0, 0, 4, 6, 4, 0, 0, 1]",
                        "numerator-coefficients = [1, 0, 0, 4, 7, 4, 0, 0, 1]", 1)
    p = tmp_path / "golden.toml"
    p.write_text(text)
    code, out, _ = run(capsys, "verify", str(p), "--only", "A2", "--format", "text")
    assert code == 1
    assert "MISMATCH A2/regular/g=1: degrees 4" in out
    assert "MATCH    A2/identity/g=1" in out


def test_verify_malformed_file(capsys, tmp_path):
    p = tmp_path / "golden.toml"
    p.write_text('[[row]]\ntype = "A2"\n')
    code, _, err = run(capsys, "verify", str(p))
    assert code == 2 and "missing field" in err


@pytest.mark.parametrize("name,numerator", [
    ("toric_s2.json", [1, 0, 1]),
    ("franz_puppe_r4.json", [1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1]),
    ("bm_single_edge.json", [1, 0, 1]),
])
def test_sheaf_descriptors(capsys, name, numerator):
    code, data = run_json(capsys, "sheaf", str(data_path("descriptors") / name))
    assert code == 0 and data["numerator"] == numerator


def test_sheaf_schema_errors_use_json_pointers(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kind": "bm", "rank": 1, "vertices": ["a"], "stalks": {"a": [0]},
                             "edges": [{"source": "a", "target": "a", "weight": ["x"],
                                        "rho_source": [[1]], "rho_target": [[1]]}]}))
    code, _, err = run(capsys, "sheaf", str(p))
    assert code == 2 and "/edges/0/weight/0" in err


def test_sheaf_semantic_errors_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kind": "constant", "rank": 1, "vertices": ["a"],
                             "hyperedges": [{"weight": [1], "vertices": ["a", "z"]}]}))
    code, _, err = run(capsys, "sheaf", str(p))
    assert code == 2 and "unknown vertex" in err


def test_sheaf_invalid_json(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert run(capsys, "sheaf", str(p))[0] == 2


def test_groups(capsys):
    code, out, _ = run(capsys, "groups")
    assert code == 0 and "SO3: rank 1, central elements identity, rot" in out


def test_json_is_identical_across_worker_counts(capsys):
    outputs = []
    for workers in ("1", "2"):
        code, out, _ = run(capsys, "compute", "--group", "B2", "--workers", workers)
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]


@pytest.mark.skipif(shutil.which("gkm") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["gkm", "compute", "--group", "SO3", "--format", "text"], capture_output=True, text=True)
    assert res.returncode == 0 and "total: 2 + 2t^3" in res.stdout


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gkmsheaves.cli", "groups"], capture_output=True, text=True)
    assert res.returncode == 0 and "A2" in res.stdout
