import hashlib
import json

import numpy as np
import pytest

from symforma.cli import EXIT_ASSUMPTION, EXIT_DIVERGENCE, EXIT_OK, EXIT_VALIDATION, EXIT_VERIFY, main
from symforma.scenario import builtin, load_scenario, serialize

DIVERGENT = {
    "name": "blowup",
    "graph": {"n": 2, "edges": [[1, 2]]},
    "symmetry": {"generators": [], "representation": {"kind": "trivial"}},
    "target": {"p_star": [[0, 0], [1, 0]]},
    "initial": {"mode": "points", "points": [[0, 0], [10, 0]]},
    "controller": "classic",
    "integrator": {"method": "euler", "dt": 0.1, "T": 5.0},
}


def test_analyze_ok(tmp_path, capsys):
    assert main(["analyze", "c4_rotation", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "group order: 4" in out
    rep = json.loads((tmp_path / "c4_rotation_analysis.json").read_text())
    assert rep["orbit_isomorphism"]["dims_match"]
    assert rep["quotient_edges"][0]["gain"] == "(1 2 4 3)"
    manifest = json.loads((tmp_path / "c4_rotation_manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["command"] == "analyze"


def test_analyze_assumption_failure(capsys):
    assert main(["analyze", "fig5_mirror"]) == EXIT_ASSUMPTION
    assert "{3,6}" in capsys.readouterr().err


def test_analyze_classic_ignores_tree_assumption():
    assert main(["analyze", "fig5_mirror", "--controller", "classic"]) == EXIT_OK


def test_analyze_validation_error(tmp_path, capsys):
    doc = json.loads(serialize(builtin("c4_rotation")))
    doc["symmetry"]["generators"] = [[2, 1, 3, 4]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["analyze", str(path)]) == EXIT_VALIDATION
    assert "symmetry.generators[0]" in capsys.readouterr().err


def test_simulate_writes_outputs(tmp_path, capsys):
    code = main(["simulate", "c4_mirror", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("PASS")
    for suffix in ("scenario.json", "trajectory.csv", "trajectory.json", "report.json", "manifest.json"):
        assert (tmp_path / f"c4_mirror_{suffix}").exists()
    manifest = json.loads((tmp_path / "c4_mirror_manifest.json").read_text())
    sc = load_scenario(str(tmp_path / "c4_mirror_scenario.json"))
    assert manifest["scenario_hash"] == hashlib.sha256(serialize(sc).encode()).hexdigest()
    assert manifest["scenario_hash"] == builtin("c4_mirror").content_hash
    report = json.loads((tmp_path / "c4_mirror_report.json").read_text())
    assert report["passed"] and report["max_edge_error"] < 1e-6


def test_simulate_short_horizon_fails_verification(tmp_path):
    code = main(["simulate", "example8", "--horizon", "0.5", "--format", "csv", "--out", str(tmp_path)])
    assert code == EXIT_VERIFY
    assert not (tmp_path / "example8_trajectory.json").exists()
    data = np.loadtxt(tmp_path / "example8_trajectory.csv", delimiter=",", skiprows=1)
    assert data[-1, 0] == pytest.approx(0.5)


def test_simulate_divergence(tmp_path, capsys):
    path = tmp_path / "blowup.json"
    path.write_text(json.dumps(DIVERGENT))
    assert main(["simulate", str(path), "--out", str(tmp_path / "out")]) == EXIT_DIVERGENCE
    assert "truncated" in capsys.readouterr().err


def test_simulate_orbit_law_without_trees(tmp_path):
    assert main(["simulate", "c4_halfturn", "--controller", "orbit", "--out", str(tmp_path)]) == EXIT_ASSUMPTION


def test_simulate_is_deterministic(tmp_path):
    args = ["simulate", "c4_rotation", "--horizon", "1", "--format", "csv", "--out"]
    assert main(args + [str(tmp_path / "a")]) == main(args + [str(tmp_path / "b")])
    a = (tmp_path / "a" / "c4_rotation_trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "c4_rotation_trajectory.csv").read_bytes()
    assert a == b


def test_verify_gradients(tmp_path, capsys):
    assert main(["verify", "gradients", "--json", "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] and summary["suites"][0]["suite"] == "gradients"
    assert (tmp_path / "verify_gradients_manifest.json").exists()


def test_unknown_suite_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["verify", "everything"])
    assert info.value.code == 2


def test_bad_numeric_override():
    assert main(["simulate", "c4_rotation", "--dt", "-1"]) == EXIT_VALIDATION
