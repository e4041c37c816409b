from __future__ import annotations

import csv
import io
import json

import pytest

from spinlab.cli import main


def run(argv):
    buf = io.StringIO()
    code = main(argv, stream=buf)
    lines = [json.loads(s) for s in buf.getvalue().splitlines() if s.strip()]
    return code, lines


def summary(lines):
    assert lines and lines[-1]["summary"] is True
    return lines[-1]


# -- index ------------------------------------------------------------------------------

@pytest.mark.parametrize("argv,value", [
    (["index", "ahat-hypersurface", "--n", "1", "--d", "2"], "2"),
    (["index", "ahat-hypersurface", "--n", "1", "--d", "1"], "0"),
    (["index", "p-poly", "--j", "1", "--l", "2"], "-4"),
    (["index", "ad-st", "--N", "2", "--indE", "1", "--indPartial", "0"], "4"),
    (["index", "su2-index", "--a", "4,3", "--l", "1"], "5"),
])
def test_index_values(argv, value):
    code, lines = run(argv)
    assert code == 0
    assert str(lines[0]["value"]) == value
    assert summary(lines)["passed"] is True


def test_index_roots_and_degenerate():
    code, lines = run(["index", "roots", "--a", "4,3", "--scan-limit", "200"])
    assert code == 0
    assert lines[0]["value"] == [2] or lines[0]["value"] == ["2"]
    assert lines[0]["within_bound"] and lines[0]["scan_agrees"]
    code, lines = run(["index", "roots", "--a", "0"])
    assert code == 0
    assert lines[0]["degenerate"] is True


def test_index_two_implies_third_violation():
    # inconsistent triple: ad-st gives 4 but 5 is claimed
    code, _ = run(["index", "two-implies-third", "--N", "2", "--indE", "1", "--indPartial", "0",
                   "--indAd", "5"])
    assert code == 1
    code, _ = run(["index", "two-implies-third", "--N", "2", "--indE", "1", "--indPartial", "0",
                   "--indAd", "4"])
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["index", "p-poly", "--j", "1"],
    ["index", "su2-index", "--l", "1"],
    ["index", "roots", "--a", "x,y"],
    ["bogus"],
    [],
    ["index", "p-poly", "--j", "1", "--l", "2", "--set", "novalue"],
    ["spectrum", "--m", "2", "--delta", "a,b"],
    ["spectrum", "--m", "2", "--rep", "nonsense"],
])
def test_usage_errors(argv, capsys):
    code, _ = run(argv)
    assert code == 2


# -- identities and selftest -----------------------------------------------------------

def test_identities_pass_and_violation(tmp_path):
    code, lines = run(["identities", "--samples", "4"])
    assert code == 0
    assert all(r["passed"] for r in lines[:-1])
    cfg = tmp_path / "strict.cfg"
    cfg.write_text("# impossible tolerance\ntolerance = 0\n")
    code, lines = run(["identities", "--samples", "4", "--config", str(cfg)])
    assert code == 1
    assert summary(lines)["failed"]


def test_selftest():
    code, lines = run(["selftest"])
    assert code == 0
    names = {r["name"] for r in lines[:-1]}
    assert {"p_1(2)", "u1_splitting", "conjugation_blades"} <= names


def test_determinism_and_seed():
    a = run(["identities", "--samples", "4", "--seed", "7"])
    b = run(["identities", "--seed", "7", "--samples", "4"])
    assert a == b
    c = run(["identities", "--samples", "4", "--seed", "8"])
    assert c[1][-1]["seed"] == 8


# -- spectral commands -----------------------------------------------------------------

@pytest.mark.parametrize("m,N,rep,kdim", [(2, 1, "u-standard", 2), (4, 1, "u-standard", 4),
                                          (3, 2, "su-standard", 4)])
def test_spectrum_kernel(m, N, rep, kdim):
    code, lines = run(["spectrum", "--m", str(m), "--rep", rep, "--N", str(N), "--cutoff", "1"])
    assert code == 0
    assert summary(lines)["kernel_dim"] == kdim


def test_perturb_u1_and_outputs(tmp_path):
    out = tmp_path / "run"
    code, lines = run(["perturb", "--m", "3", "--rep", "u-standard", "--N", "1", "--cutoff", "2",
                       "--out", str(out)])
    assert code == 0
    s = summary(lines)
    assert s["splittings"] == pytest.approx([-0.3, 0.3], abs=1e-12)
    assert s["verdict"] == "not decoupling"
    assert s["weyl_ok"] and s["hellmann_feynman_ok"]
    assert {p.name for p in out.iterdir()} == {"records.jsonl", "summary.json", "branches.csv"}
    assert json.loads((out / "summary.json").read_text()) == s
    with open(out / "branches.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "branch_id", "lambda"]
    at0 = sorted(float(r["lambda"]) for r in rows if float(r["t"]) == 0.0)
    assert at0 == pytest.approx([0.0, 0.0], abs=1e-12)
    recs = [json.loads(s) for s in (out / "records.jsonl").read_text().splitlines()]
    assert recs == lines[:-1]


def test_config_and_set_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m = 3\nrep = u-standard\nN = 1\ncutoff = 1\nc = 0.5\n")
    code, lines = run(["perturb", "--config", str(cfg)])
    assert code == 0
    assert summary(lines)["splittings"] == pytest.approx([-0.5, 0.5], abs=1e-12)
    code, lines = run(["perturb", "--config", str(cfg), "--set", "c=0.25"])
    assert summary(lines)["splittings"] == pytest.approx([-0.25, 0.25], abs=1e-12)


# -- current scan and BPST -------------------------------------------------------------

def test_current_scan_dim3():
    code, lines = run(["current-scan", "--dims", "3", "--restarts", "8"])
    assert code == 0
    rows = [r for r in lines[:-1] if r.get("rep") == "su-standard"]
    assert rows[0]["injective"] is True and rows[0]["min_current"] > 1e-3


def test_verify_bpst_pass_and_noise():
    base = ["verify-bpst", "--points", "10", "--set", "far_points=2", "--resolutions", "16,32"]
    code, lines = run(base)
    assert code == 0
    s = summary(lines)
    assert min(min(v) for v in s["orders"].values()) >= 3.8
    assert s["instanton"]["sign"] == -1
    assert s["current"] <= 1e-12
    code, lines = run(base + ["--noise", "0.01"])
    assert code == 1
    assert max(summary(lines)["dirac"]) >= 1e-4
