import json

import numpy as np
import pytest

from ppkrige.cli import main
from ppkrige.io import load_points, load_surface_csv, load_window, save_window
from ppkrige import band_window


def run(*argv):
    return main(list(argv))


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert "ppkrige" in capsys.readouterr().out


def test_usage_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        run()
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("simulate")  # --out is required
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("krige", "--pattern", "p.csv", "--out", "-", "--targets", "some")
    assert exc.value.code == 1


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("simulate", "--seed", "5", "--out", str(a)) == 0
    assert run("simulate", "--seed", "5", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    pts = load_points(a)
    assert len(pts) > 0


def test_simulate_to_stdout(capsys):
    assert run("simulate", "--model", "poisson", "--lambda", "50",
               "--seed", "1", "--out", "-") == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "x,y"
    pts = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert ((pts >= 0.0) & (pts <= 1.0)).all()


def test_simulate_side_outputs(tmp_path):
    pat = tmp_path / "pat.csv"
    parents = tmp_path / "parents.csv"
    truth = tmp_path / "truth.csv"
    assert run("simulate", "--seed", "3", "--out", str(pat),
               "--parents-out", str(parents),
               "--true-intensity-out", str(truth), "--grid-size", "12") == 0
    assert len(load_points(parents)) > 0
    pts, vals = load_surface_csv(truth)
    assert len(vals) == 144
    assert (vals >= 0).all()
    # side outputs are a thomas-only feature
    assert run("simulate", "--model", "poisson", "--out", str(pat),
               "--parents-out", str(parents)) == 1


def test_estimate_pcf_roundtrip(tmp_path, capsys):
    pat = tmp_path / "pat.csv"
    run("simulate", "--seed", "2", "--out", str(pat))
    out = tmp_path / "pcf.csv"
    assert run("estimate-pcf", "--pattern", str(pat), "--rmax", "0.2",
               "--nr", "32", "--out", str(out)) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "r,g"
    assert len(lines) == 33
    assert run("estimate-pcf", "--pattern", str(pat),
               "--bandwidth", "abc", "--out", "-") == 1


def test_optimal_mesh_json(tmp_path, capsys):
    pat = tmp_path / "pat.csv"
    run("simulate", "--seed", "4", "--out", str(pat))
    assert run("optimal-mesh", "--pattern", str(pat), "--n-grid", "64",
               "--out", "-") == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"nu_opt", "b", "grid_nx", "grid_ny", "I_grad",
                        "lambda_hat", "method", "n_grid", "bandwidth", "k"}
    assert doc["method"] == "kernel"
    assert doc["nu_opt"] > 0
    assert doc["b"] == pytest.approx(doc["nu_opt"] ** 0.5)
    assert run("optimal-mesh", "--pattern", str(pat), "--method", "knn",
               "--n-grid", "64", "--k", "12", "--out", "-") == 0
    assert json.loads(capsys.readouterr().out)["k"] == 12


def test_krige_prediction(tmp_path):
    win = tmp_path / "win.json"
    save_window(band_window(0.5, 0.5), win)
    pat = tmp_path / "pat.csv"
    run("simulate", "--seed", "6", "--window", str(win), "--out", str(pat))
    out = tmp_path / "krige.csv"
    var = tmp_path / "var.csv"
    assert run("krige", "--pattern", str(pat), "--window", str(win),
               "--cell-side", "0.25", "--pcf", "thomas", "--kappa", "10",
               "--sigma", "0.05", "--out", str(out),
               "--variance-out", str(var)) == 0
    _, vals = load_surface_csv(out)
    assert len(vals) == 16
    assert np.isfinite(vals).all()
    assert (vals >= 0).all()  # clamped by default
    _, variances = load_surface_csv(var)
    assert (variances >= 0).all()
    # auto cell side needs full observation
    assert run("krige", "--pattern", str(pat), "--window", str(win),
               "--out", "-") == 1
    # thomas pcf needs its parameters
    assert run("krige", "--pattern", str(pat), "--window", str(win),
               "--cell-side", "0.25", "--pcf", "thomas", "--out", "-") == 1


def test_krige_auto_cell_side_on_full_window(tmp_path):
    pat = tmp_path / "pat.csv"
    run("simulate", "--seed", "8", "--out", str(pat))
    out = tmp_path / "est.csv"
    assert run("krige", "--pattern", str(pat), "--out", str(out),
               "--targets", "observed") == 0
    _, vals = load_surface_csv(out)
    assert np.isfinite(vals).all()


def test_data_errors_exit_2(tmp_path):
    missing = tmp_path / "nope.csv"
    assert run("estimate-pcf", "--pattern", str(missing), "--out", "-") == 2
    bad_win = tmp_path / "bad.json"
    bad_win.write_text("{")
    pat = tmp_path / "pat.csv"
    run("simulate", "--seed", "1", "--out", str(pat))
    assert run("krige", "--pattern", str(pat), "--window", str(bad_win),
               "--cell-side", "0.25", "--out", "-") == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y\n")
    assert run("estimate-pcf", "--pattern", str(empty), "--out", "-") == 2


def test_experiment_subcommand(tmp_path):
    cfg = tmp_path / "study.json"
    cfg.write_text(json.dumps({
        "rates": [0.5],
        "band_widths": [0.5],
        "grid_sizes": [8],
        "pcf_modes": ["known"],
        "n_sim": 4,
        "base_seed": 3,
    }))
    out = tmp_path / "report.json"
    table = tmp_path / "report.csv"
    assert run("experiment", "--config", str(cfg), "--out", str(out),
               "--csv-out", str(table)) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["n_sim"] == 4
    assert len(doc["results"]) == 1
    res = doc["results"][0]
    assert res["grid_size"] == 8
    assert res["msep"] > 0
    lines = table.read_text().strip().splitlines()
    assert lines[0].startswith("rate,band_width")
    assert len(lines) == 2

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_sim": 4, "mystery": True}))
    assert run("experiment", "--config", str(bad), "--out", "-") == 2
    bad.write_text(json.dumps({"rates": [0.5], "band_widths": [0.3], "n_sim": 4}))
    assert run("experiment", "--config", str(bad), "--out", "-") == 2


def test_window_option_roundtrip(tmp_path):
    # a window written by the library is accepted by every subcommand
    win = tmp_path / "win.json"
    save_window(band_window(2 / 3, 1 / 6), win)
    assert load_window(win).area_obs == pytest.approx(2 / 3)
    pat = tmp_path / "pat.csv"
    assert run("simulate", "--seed", "9", "--window", str(win),
               "--out", str(pat)) == 0
    assert run("estimate-pcf", "--pattern", str(pat), "--window", str(win),
               "--rmax", "0.2", "--out", "-") == 0
