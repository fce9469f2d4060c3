import io
import json
import math

import numpy as np
import pytest

from ppkrige import (
    DataFormatError,
    InvalidArgumentError,
    ThomasParams,
    Window,
    band_window,
    build_grid,
    estimate_pcf,
    simulate_thomas,
)
from ppkrige.io import (
    EXPERIMENT_CONFIG_SCHEMA,
    format_as_string,
    load_counts,
    load_json,
    load_pattern,
    load_points,
    load_surface_csv,
    load_window,
    save_counts,
    save_pattern,
    save_pcf_csv,
    save_surface_csv,
    save_window,
    validate_schema,
)


def test_pattern_roundtrip_is_exact(tmp_path):
    pts = np.array([[1 / 3, math.sqrt(2) / 2], [0.1, 0.9], [1e-17, 1.0]])
    path = tmp_path / "pts.csv"
    save_pattern(pts, path)
    back = load_points(path)
    assert np.array_equal(back, pts)  # repr round-trips doubles exactly


def test_pattern_file_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(DataFormatError, match="expected header"):
        load_points(path)
    path.write_text("")
    with pytest.raises(DataFormatError, match="empty"):
        load_points(path)
    path.write_text("x,y\n0.1,0.2\n0.3,oops\n")
    with pytest.raises(DataFormatError, match="line 3"):
        load_points(path)
    path.write_text("x,y\n0.1,0.2,0.3\n")
    with pytest.raises(DataFormatError, match="line 2 has 3 fields"):
        load_points(path)


def test_load_pattern_validates_bounds(tmp_path):
    path = tmp_path / "outside.csv"
    path.write_text("x,y\n2.5,0.5\n")
    with pytest.raises(DataFormatError, match="point pattern"):
        load_pattern(path, Window.full())


def test_full_window_roundtrip(tmp_path):
    w = Window.full(rect=(0.0, -1.0, 2.0, 1.0), resolution=64)
    path = tmp_path / "win.json"
    save_window(w, path)
    back = load_window(path)
    assert back.is_fully_observed
    assert (back.xmin, back.ymin, back.xmax, back.ymax) == (0.0, -1.0, 2.0, 1.0)
    assert back.mask.shape[0] == 64


def test_band_window_roundtrip(tmp_path):
    w = band_window(0.5, 0.125)
    path = tmp_path / "bands.json"
    save_window(w, path)
    back = load_window(path)
    assert back.observed_spec == ("bands", 0.5, 0.125)
    assert back.area_obs == w.area_obs
    pts = np.random.default_rng(0).uniform(size=(200, 2))
    assert np.array_equal(back.contains_obs(pts), w.contains_obs(pts))


def test_mask_window_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    mask = rng.uniform(size=(64, 64)) < 0.4
    w = Window.from_mask((0.0, 0.0, 1.0, 1.0), mask)
    path = tmp_path / "mask.json"
    save_window(w, path)
    back = load_window(path)
    assert np.array_equal(back.mask, mask)
    assert back.area_obs == w.area_obs


def test_window_file_errors(tmp_path):
    path = tmp_path / "win.json"
    path.write_text("{not json")
    with pytest.raises(DataFormatError, match="window file"):
        load_window(path)
    path.write_text(json.dumps({"observed": "full"}))
    with pytest.raises(DataFormatError, match="rect"):
        load_window(path)
    path.write_text(json.dumps({"rect": [0, 0, 1, 1], "observed": {"type": "bands", "rate": 0.5}}))
    with pytest.raises(DataFormatError):
        load_window(path)
    path.write_text(json.dumps({"rect": [0, 0, 1, 1], "observed": "full", "extra": 1}))
    with pytest.raises(DataFormatError):
        load_window(path)
    path.write_text(json.dumps({"rect": [0, 0, 0, 1], "observed": "full"}))
    with pytest.raises(DataFormatError, match="positive extent"):
        load_window(path)
    path.write_text(
        json.dumps(
            {
                "rect": [0, 0, 1, 1],
                "observed": {"type": "mask", "shape": [4, 4], "packed": "@@@"},
            }
        )
    )
    with pytest.raises(DataFormatError, match="base64"):
        load_window(path)


def test_counts_roundtrip(tmp_path):
    w = band_window(0.5, 0.25)
    grid = build_grid(w, 0.25)
    counts = np.arange(grid.n).reshape(grid.ny, grid.nx)
    path = tmp_path / "counts.json"
    save_counts(counts, grid, path)
    back, cell_side, rect = load_counts(path)
    assert np.array_equal(back, counts)
    assert cell_side == grid.cell_side
    assert rect == (0.0, 0.0, 1.0, 1.0)


def test_counts_shape_mismatch(tmp_path):
    doc = {
        "rect": [0, 0, 1, 1],
        "cell_side": 0.5,
        "nx": 2,
        "ny": 2,
        "counts": [[1, 2, 3], [4, 5, 6]],
    }
    path = tmp_path / "counts.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(DataFormatError, match="does not match"):
        load_counts(path)


def test_surface_roundtrip_keeps_nan(tmp_path):
    grid = build_grid(Window.full(), 0.5)
    values = np.array([1.5, np.nan, -2.0, 0.0])
    path = tmp_path / "surface.csv"
    save_surface_csv(values, grid, path)
    pts, back = load_surface_csv(path)
    assert np.array_equal(pts, grid.centers())
    assert np.array_equal(back, values, equal_nan=True)
    with pytest.raises(InvalidArgumentError):
        save_surface_csv(values[:2], grid, path)


def test_pcf_csv_columns(tmp_path):
    sim = simulate_thomas(ThomasParams(10, 50, 0.05), seed=0)
    pcf = estimate_pcf(sim.pattern, Window.full(), r_max=0.2, n_r=16)
    path = tmp_path / "pcf.csv"
    save_pcf_csv(pcf, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "r,g"
    assert len(lines) == 17
    r0, g0 = (float(v) for v in lines[1].split(","))
    assert r0 == pcf.r[0]
    assert g0 == pcf.values[0]


def test_format_as_string_matches_file(tmp_path):
    pts = np.array([[0.25, 0.75]])
    path = tmp_path / "pts.csv"
    save_pattern(pts, path)
    assert format_as_string(save_pattern, pts) == path.read_text()


def test_json_stream_support():
    buf = io.StringIO('{"rect": [0, 0, 1, 1], "observed": "full"}')
    assert load_window(buf).is_fully_observed


def test_experiment_config_schema():
    good = {"rates": [0.5], "band_widths": [0.25], "n_sim": 10}
    validate_schema(good, EXPERIMENT_CONFIG_SCHEMA, "experiment config")
    with pytest.raises(DataFormatError, match="n_sim"):
        validate_schema({"n_sim": 1}, EXPERIMENT_CONFIG_SCHEMA, "experiment config")
    with pytest.raises(DataFormatError, match="unknown"):
        validate_schema({"unknown": 3}, EXPERIMENT_CONFIG_SCHEMA, "experiment config")


def test_load_json_reports_parse_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("[1, 2,")
    with pytest.raises(DataFormatError, match="experiment config"):
        load_json(path, "experiment config")
