import io
import json
import re
from pathlib import Path

import numpy as np
import pytest

from guessleak.cli import main
from guessleak.errors import EXIT_BREACH, EXIT_CAP, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION
from guessleak.fileio import load_system, read_curve, read_vertices, write_system

from conftest import GOLDEN


def run_cli(*argv) -> tuple[int, str]:
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def grab(report: str, key: str) -> float:
    m = re.search(rf"^{re.escape(key)} = (.+)$", report, re.MULTILINE)
    assert m, f"{key} missing in report:\n{report}"
    return float(m.group(1))


# ---------------------------------------------------------------------------
# entropy


def test_entropy_report_agencies(agencies_path):
    code, report = run_cli("entropy", "--input", str(agencies_path))
    assert code == EXIT_OK
    assert abs(grab(report, "H_G(X)") - 1.7) <= 1e-12
    assert abs(grab(report, "H_G(X|W)") - 1.35) <= 1e-12
    assert abs(grab(report, "GL(X->W)") - 0.35) <= 1e-12
    assert abs(grab(report, "GL_m(X->W)") - 1.7 / 1.35) <= 1e-12
    assert "rank(p_X) = [1, 2, 3]" in report


def test_entropy_independent_system(tmp_path):
    doc = {
        "p_W": [0.2, 0.5, 0.3],
        "P_X_given_W": [[0.6, 0.4], [0.6, 0.4], [0.6, 0.4]],
        "P_Y_given_W": [[1, 0], [0, 1], [0.5, 0.5]],
    }
    path = tmp_path / "indep.system"
    path.write_text(json.dumps(doc))
    code, report = run_cli("entropy", "--input", str(path))
    assert code == EXIT_OK
    assert grab(report, "GL(X->W)") == 0.0


def test_entropy_revealed_system(tmp_path):
    doc = {
        "p_W": [0.5, 0.3, 0.2],
        "P_X_given_W": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        "P_Y_given_W": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
    }
    path = tmp_path / "revealed.system"
    path.write_text(json.dumps(doc))
    code, report = run_cli("entropy", "--input", str(path))
    assert code == EXIT_OK
    assert grab(report, "H_G(X|W)") == 1.0


# ---------------------------------------------------------------------------
# error paths and exit codes


def test_parse_error_exit_code(tmp_path):
    path = tmp_path / "broken.system"
    path.write_text("{not json")
    assert run_cli("entropy", "--input", str(path))[0] == EXIT_PARSE


def test_missing_keys_exit_code(tmp_path):
    path = tmp_path / "empty.system"
    path.write_text("{}")
    assert run_cli("entropy", "--input", str(path))[0] == EXIT_PARSE


def test_validation_error_exit_code(tmp_path):
    doc = {
        "p_W": [0.5, 0.5],
        "P_X_given_W": [[0.5, 0.4], [0.5, 0.4]],  # columns sum to 0.9
        "P_Y_given_W": [[1, 0], [0, 1]],
    }
    path = tmp_path / "bad.system"
    path.write_text(json.dumps(doc))
    assert run_cli("entropy", "--input", str(path))[0] == EXIT_VALIDATION


def test_cap_exit_code(tmp_path, monkeypatch):
    n = 4
    doc = {
        "p_W": [1.0 / n] * n,
        "P_X_given_W": np.eye(n).tolist(),
        "P_Y_given_W": np.eye(n).tolist(),
    }
    path = tmp_path / "big.system"
    path.write_text(json.dumps(doc))
    monkeypatch.setenv("GUESSLEAK_MAX_W", "3")
    assert run_cli("vertices", "--input", str(path))[0] == EXIT_CAP
    monkeypatch.setenv("GUESSLEAK_MAX_W", "5")
    assert run_cli("vertices", "--input", str(path))[0] == EXIT_OK


def test_budget_exit_code(agencies_path):
    code, _ = run_cli(
        "verify", "--input", str(agencies_path), "--grid-res", "40", "--trials", "1000"
    )
    assert code == EXIT_CAP  # 12341^3 lattice mechanisms blow the budget


# ---------------------------------------------------------------------------
# vertices


def test_vertices_golden_regression(agencies_path, tmp_path):
    cache = tmp_path / "verts.json"
    code, report = run_cli(
        "vertices", "--input", str(agencies_path), "--exact", "--cache", str(cache)
    )
    assert code == EXIT_OK
    assert "vertices: 10 (exact mode)" in report
    got = read_vertices(str(cache))
    want = read_vertices(str(GOLDEN / "agencies_vertices.json"))
    assert got == want


def test_vertices_listing_without_cache(agencies_path):
    code, report = run_cli("vertices", "--input", str(agencies_path))
    assert code == EXIT_OK
    doc = json.loads(report.split("\n", 1)[1])
    assert doc["dim"] == 3 and len(doc["vertices"]) == 10


# ---------------------------------------------------------------------------
# tradeoff


def test_tradeoff_round_trip(agencies_path, tmp_path):
    out = tmp_path / "curve.csv"
    code, report = run_cli(
        "tradeoff", "--input", str(agencies_path), "--f", "tv", "--grid", "9",
        "--out", str(out),
    )
    assert code == EXIT_OK
    cols = read_curve(str(out))
    assert len(cols["epsilon"]) == 9
    assert cols["tv"][0] > 0.0
    # 12-significant-digit round trip of the summary values
    m = re.search(r"tv: t\(0\.0\) = ([0-9.e+-]+)", report)
    assert m and abs(float(m.group(1)) - cols["tv"][0]) < 1e-12
    mech_rows = (tmp_path / "curve.csv.mechanisms.csv").read_text().strip().split("\n")
    assert mech_rows[0].startswith("objective,mode,epsilon,output,p_u,w_0")
    assert len(mech_rows) > 9


def test_tradeoff_explicit_eps_and_glm(agencies_path, tmp_path):
    out = tmp_path / "curve_glm.csv"
    code, _ = run_cli(
        "tradeoff", "--input", str(agencies_path), "--f", "kl", "--eps", "1.0,1.1",
        "--mode", "glm", "--out", str(out),
    )
    assert code == EXIT_OK
    cols = read_curve(str(out))
    assert cols["epsilon"][0] == 1.0


def test_tradeoff_golden_regression(agencies_path, tmp_path):
    out = tmp_path / "curve.csv"
    code, _ = run_cli("tradeoff", "--input", str(agencies_path), "--grid", "36", "--out", str(out))
    assert code == EXIT_OK
    got = read_curve(str(out))
    want = read_curve(str(GOLDEN / "agencies_curve.csv"))
    assert sorted(got) == sorted(want)
    for key in want:
        assert np.allclose(got[key], want[key], atol=1e-12), key


# ---------------------------------------------------------------------------
# verify


def test_verify_passes_on_agencies(agencies_path):
    code, report = run_cli(
        "verify", "--input", str(agencies_path), "--grid-res", "6", "--trials", "200000"
    )
    assert code == EXIT_OK
    assert "FAIL" not in report
    assert "checks failed: 0" in report


def test_verify_catches_corrupt_file(tmp_path):
    doc = {
        "p_W": [0.45, 0.26, 0.29],
        "P_X_given_W": [[0.6, 0.3, 0], [0.7, 0, 0.2], [0, 0.5, 0.4]],  # sums 0.9
        "P_Y_given_W": np.eye(3).tolist(),
    }
    path = tmp_path / "corrupt.system"
    path.write_text(json.dumps(doc))
    code, _ = run_cli("verify", "--input", str(path))
    assert code == EXIT_VALIDATION


def test_verify_seeded_2x2x2(tmp_path):
    rng = np.random.default_rng(99)
    from conftest import random_system

    system = random_system(rng, 2, 2, 2)
    path = tmp_path / "rand.system"
    write_system(str(path), system)
    code, report = run_cli(
        "verify", "--input", str(path), "--grid-res", "10", "--trials", "100000", "--seed", "4"
    )
    assert code == EXIT_OK, report


# ---------------------------------------------------------------------------
# determinism


def test_byte_identical_curves_and_reports(agencies_path, tmp_path):
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    code_a, rep_a = run_cli("tradeoff", "--input", str(agencies_path), "--grid", "12", "--out", str(out_a))
    code_b, rep_b = run_cli("tradeoff", "--input", str(agencies_path), "--grid", "12", "--out", str(out_b))
    assert code_a == code_b == EXIT_OK
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (tmp_path / "a.csv.mechanisms.csv").read_bytes() == (tmp_path / "b.csv.mechanisms.csv").read_bytes()
    assert rep_a.replace("a.csv", "X") == rep_b.replace("b.csv", "X")

    rep_1 = run_cli("verify", "--input", str(agencies_path), "--grid-res", "5", "--trials", "50000", "--seed", "21")
    rep_2 = run_cli("verify", "--input", str(agencies_path), "--grid-res", "5", "--trials", "50000", "--seed", "21")
    assert rep_1 == rep_2


def test_system_write_read_round_trip(agencies_system, tmp_path):
    path = tmp_path / "copy.system"
    write_system(str(path), agencies_system, labels={"W": ["a", "b", "c"]})
    loaded = load_system(str(path))
    assert np.max(np.abs(loaded.system.p_W.p - agencies_system.p_W.p)) == 0.0
    assert np.max(np.abs(loaded.system.P_XgW.matrix - agencies_system.P_XgW.matrix)) == 0.0
    assert loaded.labels == {"W": ["a", "b", "c"]}
