import csv
import json
import math

import pytest

from dislocated_dirac import cli
from dislocated_dirac.propagator import MULTIPLIER_CONVENTION

SMALL_EVOLVE = {
    "datum": {"width": 2.0, "cutoff": 4.0, "half_width": 6.0, "h": 0.05},
    "propagator": {"k_max": 20.0},
    "eval_h": 0.5,
}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_meta(out, command):
    return json.loads((out / f"{command}.json").read_text())


def test_spectrum_near_pi(tmp_path):
    assert cli.main(["spectrum", "--tau", "3.14159", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 1
    assert abs(float(rows[0]["omega_tau"])) < 1e-5
    assert rows[0]["bound_state"] == "true"
    psi = read_csv(tmp_path / "spectrum_psi.csv")
    assert len(psi) == 401
    meta = read_meta(tmp_path, "spectrum")
    assert meta["exit_status"] == 0
    assert meta["multiplier_convention"] == MULTIPLIER_CONVENTION
    assert len(meta["config_sha256"]) == 64
    assert meta["outputs"] == ["spectrum.csv", "spectrum_psi.csv"]


def test_spectrum_endpoints_have_no_state(tmp_path):
    assert cli.main(["spectrum", "--tau", "0", "6.283185307179586", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "spectrum.csv")
    assert [r["bound_state"] for r in rows] == ["false", "false"]
    assert read_csv(tmp_path / "spectrum_psi.csv") == []


def test_scatter_at_pi(tmp_path):
    assert cli.main(["scatter", "--tau", str(math.pi), "--k", "1.0", "--out", str(tmp_path)]) == 0
    row = read_meta(tmp_path, "scatter")["results"]["rows"][0]
    assert row["T_abs2"] == pytest.approx(0.5, abs=1e-14)
    csv_row = read_csv(tmp_path / "scatter.csv")[0]
    assert float(csv_row["T_abs2"]) == row["T_abs2"]


def test_floats_round_trip(tmp_path):
    cli.main(["scatter", "--tau", "2.0", "--k", "0.3", "--out", str(tmp_path)])
    row = read_csv(tmp_path / "scatter.csv")[0]
    from dislocated_dirac.spectral import t_squared

    assert float(row["T_abs2"]) == float(t_squared(0.3, 2.0))


@pytest.mark.parametrize(
    "argv",
    [
        ["spectrum", "--tau", "7.0"],
        ["spectrum", "--tau", "-0.1"],
        ["scatter", "--k", "0"],
        ["frobnicate"],
        ["spectrum", "--tau", "abc"],
        ["evolve", "--epsilon", "-1"],
        ["evolve", "--k0", "500"],
        ["spectrum", "--seed", "-3"],
        ["validate", "--threads", "0"],
    ],
)
def test_bad_configuration_exits_2(argv, tmp_path):
    argv = argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


@pytest.mark.parametrize(
    "doc",
    [
        {"bogus": 1},
        {"propagator": {"k_max": 0.5}},
        {"datum": {"nope": 1}},
        {"decay_windows": [[1.0]]},
        {"spectrum": []},
        [1, 2],
    ],
)
def test_bad_config_documents_exit_2(doc, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_missing_config_exits_4(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "absent.json")]) == 4


def test_unwritable_output_exits_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["spectrum", "--out", str(blocker / "sub")]) == 4


def test_config_merge_and_override(tmp_path):
    doc = {"tau": [1.0], "k": [0.5], "scatter": {"k": [2.0, 3.0]}, "spectrum": {"tau": [9.0]}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "o"
    assert cli.main(["scatter", "--config", str(path), "--out", str(out)]) == 0
    cfg = read_meta(out, "scatter")["config"]
    assert cfg["tau"] == [1.0] and cfg["k"] == [2.0, 3.0]
    assert cli.main(["scatter", "--config", str(path), "--tau", "2.5", "--out", str(out)]) == 0
    cfg = read_meta(out, "scatter")["config"]
    assert cfg["tau"] == [2.5] and cfg["k"] == [2.0, 3.0]


def test_digest_ignores_output_location(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["scatter", "--tau", "1.0", "--out", str(a)])
    cli.main(["scatter", "--tau", "1.0", "--out", str(b), "--threads", "2"])
    cli.main(["scatter", "--tau", "1.5", "--out", str(tmp_path / "c")])
    da, db = read_meta(a, "scatter")["config_sha256"], read_meta(b, "scatter")["config_sha256"]
    assert da == db
    assert da != read_meta(tmp_path / "c", "scatter")["config_sha256"]


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env-out"))
    assert cli.main(["spectrum", "--tau", "1.0"]) == 0
    assert (tmp_path / "env-out" / "spectrum.csv").exists()


def test_evolve_small(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL_EVOLVE))
    out = tmp_path / "o"
    assert cli.main(["evolve", "--config", str(path), "--tau", "2.0", "--t", "0", "1.5", "--out", str(out)]) == 0
    rows = read_csv(out / "evolve.csv")
    assert len(rows) == 2 * 25
    diag = read_csv(out / "evolve_diagnostics.csv")
    assert [d["tolerance_met"] for d in diag] == ["true", "true"]
    at0 = [r for r in rows if float(r["t"]) == 0.0 and float(r["x"]) == 0.0][0]
    # the datum at the origin is 1 and smoothing damps it
    assert 0.0 < float(at0["re_a1"]) < 1.0


def test_evolve_tolerance_failure_exits_3(tmp_path):
    doc = dict(SMALL_EVOLVE, propagator={"k_max": 20.0, "quad_rel_tol": 1e-17, "quad_abs_tol": 1e-30})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "o"
    assert cli.main(["evolve", "--config", str(path), "--t", "3", "--out", str(out)]) == 3
    meta = read_meta(out, "evolve")
    assert meta["exit_status"] == 3 and meta["results"]["tolerance_met"] is False


def test_decay_sweep_rejects_unsorted_times(tmp_path):
    assert cli.main(["decay-sweep", "--t", "5", "2", "--out", str(tmp_path)]) == 2


def test_validate_exit_status(tmp_path, capsys):
    assert cli.main(["validate", "--seed", "7", "--out", str(tmp_path)]) == 0
    assert "checks passed" in capsys.readouterr().out
    rows = read_csv(tmp_path / "validate.csv")
    assert all(r["passed"] == "true" for r in rows)
