import csv
import json

import pytest

from ifslab.cli import main, parse_grid
from ifslab.families import load_fixture
from ifslab.io import read_pgm, sha256, write_family


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main(list(argv) + ["--out-dir", str(out)])
    return code, out


def read_report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


def test_parse_grid():
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_classify_fixture(tmp_path, capsys):
    code, out = run(tmp_path, "classify", "rot45_pair")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["bounded"] is True
    rep = read_report(out)
    assert rep["thresholds"]["t0"]["kind"] == "exact"


def test_manifest_lists_hashes(tmp_path):
    code, out = run(tmp_path, "t0", "rot45_pair")
    assert code == 0
    man = json.loads((out / "manifest.json").read_text())
    for e in man["files"]:
        assert sha256(out / e["file"]) == e["sha256"]
    assert {e["file"] for e in man["files"]} >= {"t0.json", "report.json"}


def test_family_file_argument(tmp_path):
    p = tmp_path / "fam.json"
    write_family(p, load_fixture("diagonal_dust"))
    code, out = run(tmp_path, "scan-connectivity", str(p), "--t-grid", "0.3,0.6")
    assert code == 0
    with open(out / "connectivity.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["status"] for r in rows] == ["disconnected-certified"] * 2
    assert list(rows[0]) == ["t", "status", "components", "gap", "witness_normal_x",
                             "witness_normal_y", "witness_offset"]


def test_attractor_outputs(tmp_path):
    code, out = run(tmp_path, "attractor", "flip_interval", "--t", "0.5", "--cell", "0.01")
    assert code == 0
    side = json.loads((out / "attractor.json").read_text())
    img = read_pgm(out / "attractor.pgm")
    assert img.shape == (side["height"], side["width"])


def test_mandel_image(tmp_path):
    code, out = run(tmp_path, "mandel", "--region", "0.5,-0.1,0.7,0.1", "--res", "3x2")
    assert code == 0
    assert read_pgm(out / "mandel.pgm").shape == (2, 3)


def test_mandel_strict_outside_is_usage_error(tmp_path):
    code, _ = run(tmp_path, "mandel", "--region", "0.5,0.5,1,1", "--res", "4x4", "--strict")
    assert code == 1


def test_unknown_family_is_usage_error(tmp_path, capsys):
    code, _ = run(tmp_path, "classify", "no_such_family")
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_bad_arguments_exit_1(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["attractor", "rot45_pair"])
    assert e.value.code == 1


def test_transition_quarter_line(tmp_path):
    code, out = run(tmp_path, "transition", "quarter_line", "--t-grid", "0.5,0.9,0.99",
                    "--cell", "0.004", "--epsilon", "1e-6")
    assert code == 0
    rep = read_report(out)
    assert all("kind" in v for v in rep["thresholds"].values())


def test_hausdorff_of_point_files(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    a.write_text("x,y\n0,0\n1,0\n")
    b.write_text("x,y\n0,0\n1,1\n")
    code, out = run(tmp_path, "hausdorff", str(a), str(b))
    assert code == 0
    assert json.loads((out / "hausdorff.json").read_text())["hausdorff"] == pytest.approx(1.0)
