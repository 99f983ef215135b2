import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

import globinv.geometry as geometry
from globinv.cli import run
from globinv.selftest import SUITES

EXPC_FILE = "dim 2\n# complex exponential\nf1 = exp(x1)*cos(x2)\nf2 = exp(x1)*sin(x2)\n"


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_invert_linear():
    code, out = call("invert", "--map", "linear", "--target", "5,3")
    assert code == 0
    doc = json.loads(out)
    np.testing.assert_allclose(doc["solution"], [1, 3], atol=1e-12)
    assert doc["schema_version"] == 1


def test_invert_expc_zero_fails_with_report(capsys):
    code, out = call("invert", "--map", "expc", "--target", "0,0")
    assert code == 3
    doc = json.loads(out)
    assert doc["failure"]["kind"] == "path_diverged"
    assert "path_diverged" in capsys.readouterr().err


def test_estimate_expc():
    code, out = call("estimate", "--map", "expc", "--box", "-2:2,-3.14159:3.14159",
                     "--grid", "101", "--seed", "42")
    assert code == 0
    assert json.loads(out)["c_hat"] == pytest.approx(math.exp(-4), rel=0.01)


def test_batch_targets_keep_order():
    code, out = call("invert", "--map", "sinperturb", "--target", "1,2", "--target", "-3,0.5",
                     "--target", "0,0")
    assert code == 0
    docs = json.loads(out)
    assert len(docs) == 3
    for doc, y in zip(docs, [(1, 2), (-3, 0.5), (0, 0)]):
        x = np.array(doc["solution"])
        np.testing.assert_allclose(x + 0.5 * np.sin(x), y, atol=1e-10)


def test_batch_with_one_failure_exits_3():
    code, out = call("invert", "--map", "expc", "--target", "1,1", "--target", "0,0")
    assert code == 3
    docs = json.loads(out)
    assert docs[0]["failure"] is None and docs[1]["failure"]["kind"] == "path_diverged"


def test_map_file(tmp_path):
    path = tmp_path / "expc.map"
    path.write_text(EXPC_FILE, encoding="utf-8")
    code, out = call("invert", "--map", f"@{path}", "--target", "-1,0.5", "--method", "geodesic")
    assert code == 0
    doc = json.loads(out)
    assert doc["method_used"] == "geodesic"
    x = doc["solution"]
    np.testing.assert_allclose([math.exp(x[0]) * math.cos(x[1]), math.exp(x[0]) * math.sin(x[1])],
                               [-1, 0.5], atol=1e-10)


@pytest.mark.parametrize("argv,code", [
    (["invert", "--map", "linear"], 2),
    (["invert", "--map", "linear", "--target", "a,b"], 2),
    (["invert", "--map", "nosuch", "--target", "1,2"], 2),
    (["invert", "--map", "shear2", "--target", "1,2,3"], 2),
    (["invert", "--map", "linear", "--target", "1,2", "--x0", "1"], 2),
    (["invert", "--map", "linear", "--target", "1,2", "--method", "bogus"], 2),
    (["invert", "--map", "sinperturb:2", "--target", "1,2"], 2),
    (["estimate", "--map", "expc", "--box", "1:0,0:1"], 2),
    (["estimate", "--map", "expc", "--box", "0:1"], 2),
    (["frobnicate"], 2),
    ([], 2),
    (["invert", "--map", "@/nonexistent/file.map", "--target", "1"], 2),
    (["invert", "--map", "linear", "--target", "5,3"], 0),
    (["invert", "--map", "expc", "--target", "0,0"], 3),
    (["estimate", "--map", "sinperturb", "--box", "-1:1,-1:1", "--grid", "3"], 0),
])
def test_exit_code_matrix(argv, code):
    assert call(*argv)[0] == code


def test_parse_and_domain_errors_exit_4(tmp_path):
    bad = tmp_path / "bad.map"
    bad.write_text("dim 1\nf1 = x1 +", encoding="utf-8")
    assert call("invert", "--map", f"@{bad}", "--target", "1")[0] == 4
    dom = tmp_path / "dom.map"
    dom.write_text("dim 1\nf1 = log(x1)", encoding="utf-8")
    assert call("invert", "--map", f"@{dom}", "--target", "1")[0] == 4


def test_reproducible_output():
    argv = ["estimate", "--map", "cyclosin", "--box", "-3:3,-3:3", "--grid", "9",
            "--random", "50", "--seed", "7", "--refine"]
    assert call(*argv) == call(*argv)
    argv = ["invert", "--map", "cyclosin", "--target", "1,-2", "--target", "3,4"]
    assert call(*argv) == call(*argv)
    argv = ["probe", "--map", "sinperturb", "--box", "-5:5,-5:5", "--random", "100", "--seed", "3"]
    assert call(*argv) == call(*argv)


def test_trace_csv_to_file(tmp_path):
    out = tmp_path / "trace.csv"
    code, text = call("trace", "--map", "shear2", "--target", "1,2", "--out", str(out))
    assert code == 0 and text == ""
    rows = list(csv.reader(out.open()))
    assert rows[0][:3] == ["t", "pos_1", "pos_2"]
    last = [float(v) for v in rows[-1]]
    assert last[0] == 1.0
    np.testing.assert_allclose(last[1:3], [1.0, 1.0], atol=1e-7)


def test_trace_from_velocity():
    code, text = call("trace", "--map", "identity", "--velocity", "2,0", "--x0", "1,1")
    assert code == 0
    last = [float(v) for v in text.strip().splitlines()[-1].split(",")]
    np.testing.assert_allclose(last[1:3], [3.0, 1.0])


def test_invert_writes_trace_csv(tmp_path):
    out = tmp_path / "r.json"
    tr = tmp_path / "t.csv"
    code, text = call("invert", "--map", "cyclosin", "--target", "-1,2", "--out", str(out),
                      "--trace", str(tr))
    assert code == 0 and text == ""
    doc = json.loads(out.read_text())
    rows = list(csv.reader(tr.open()))
    assert len(rows) - 1 == len(doc["trace"]["t"])


def test_probe_with_injected_pair():
    code, out = call("probe", "--map", "expc", "--box", "-1:1,-3.2:3.2", "--random", "0",
                     "--pair", "0,0/0,6.283185307179586")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["violations"]) == 1


def test_demo_exp():
    code, out = call("demo-exp")
    assert code == 0
    sigma_section = out.split("== sigma_min at x1=-1 ==")[1].split("==")[0]
    first = sigma_section.strip().splitlines()[0]
    value = float(first.split("sigma_min(Df) = ")[1].split()[0])
    assert abs(value - math.exp(-1)) <= 1e-6
    assert "path_diverged" in out.split("== invert (0,0) ==")[1]
    gap = float(out.split("|f(0,0) - f(0,2pi)| = ")[1].split()[0])
    assert gap <= 1e-12


def test_selftest_passes():
    code, out = call("selftest")
    assert code == 0
    assert sum(line.startswith("PASS") for line in out.splitlines()) >= 12


def test_selftest_catches_corrupted_christoffel(monkeypatch):
    real = geometry.christoffel_pushforward

    def flipped(fmap, x):
        return geometry.ChristoffelTensor(-real(fmap, x).gamma)

    monkeypatch.setattr(geometry, "christoffel_pushforward", flipped)
    code, out = call("selftest")
    assert code == 1
    failed = [line.split()[1] for line in out.splitlines() if line.startswith("FAIL")]
    assert "christoffel" in failed


def test_selftest_has_enough_suites():
    assert len(SUITES) >= 12


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "globinv", "invert", "--map", "linear",
                           "--target", "5,3"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["failure"] is None


def test_repeated_box_flags_accumulate():
    code_a, out_a = call("estimate", "--map", "expc", "--box", "-2:2", "--box", "-3:3", "--grid", "11")
    code_b, out_b = call("estimate", "--map", "expc", "--box", "-2:2,-3:3", "--grid", "11")
    assert code_a == code_b == 0
    assert out_a == out_b
