"""File formats: point patterns (CSV), windows (JSON), grids and surfaces.

All floating-point output uses ``repr``, the shortest string that parses
back to the identical double, so every file round-trips bit for bit.
JSON inputs are checked against schemas and violations report the offending
path.
"""

from __future__ import annotations

import base64
import csv
import io as _io
import json

import jsonschema
import numpy as np

from .errors import DataFormatError, InvalidArgumentError
from .geometry import (
    DEFAULT_MASK_RESOLUTION,
    PointPattern,
    Window,
    band_window,
)

_RECT_SCHEMA = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 4,
    "maxItems": 4,
}

WINDOW_SCHEMA = {
    "type": "object",
    "properties": {
        "rect": _RECT_SCHEMA,
        "resolution": {"type": "integer", "minimum": 2},
        "observed": {
            "oneOf": [
                {"const": "full"},
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "bands"},
                        "rate": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "band_width": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["type", "rate", "band_width"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "mask"},
                        "shape": {
                            "type": "array",
                            "items": {"type": "integer", "minimum": 1},
                            "minItems": 2,
                            "maxItems": 2,
                        },
                        "packed": {"type": "string"},
                        "area_obs": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["type", "shape", "packed"],
                    "additionalProperties": False,
                },
            ]
        },
    },
    "required": ["rect", "observed"],
    "additionalProperties": False,
}

EXPERIMENT_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "rates": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "band_widths": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "grid_sizes": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
        "pcf_modes": {
            "type": "array",
            "items": {"enum": ["known", "estimated"]},
            "minItems": 1,
        },
        "n_sim": {"type": "integer", "minimum": 2},
        "kappa": {"type": "number", "exclusiveMinimum": 0},
        "mu": {"type": "number", "exclusiveMinimum": 0},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "base_seed": {"type": "integer", "minimum": 0},
        "r_max": {"type": "number", "exclusiveMinimum": 0},
        "n_r": {"type": "integer", "minimum": 8},
    },
    "additionalProperties": False,
}


def validate_schema(instance, schema, what):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "(top level)"
        raise DataFormatError(f"invalid {what}: {err.message} at {where}") from err


def _fmt(value):
    """Shortest exact decimal representation of a double."""
    return repr(float(value))


def load_json(path_or_file, what):
    try:
        if hasattr(path_or_file, "read"):
            return json.load(path_or_file)
        with open(path_or_file, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise DataFormatError(f"invalid {what}: {err}") from err


def dump_json(obj, path_or_file):
    if hasattr(path_or_file, "write"):
        json.dump(obj, path_or_file, indent=2)
        path_or_file.write("\n")
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")


# -- point patterns (CSV: header "x,y") -------------------------------------


def save_pattern(pattern_or_points, path_or_file):
    points = getattr(pattern_or_points, "points", pattern_or_points)
    points = np.asarray(points, dtype=float)
    write_csv(path_or_file, ["x", "y"], ([_fmt(x), _fmt(y)] for x, y in points))


def load_points(path_or_file):
    """Read an ``x,y`` CSV into an (n, 2) float array."""
    rows = _read_csv(path_or_file, ["x", "y"], "point pattern")
    return np.array(rows, dtype=float).reshape(-1, 2)


def load_pattern(path_or_file, window):
    try:
        return PointPattern(load_points(path_or_file), window)
    except InvalidArgumentError as err:
        raise DataFormatError(f"invalid point pattern: {err}") from err


def write_csv(path_or_file, header, rows):
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="") as fh:
            _write(fh)


def _read_csv(path_or_file, header, what):
    def _read(fh):
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError(f"invalid {what}: empty file") from None
        if [c.strip() for c in first] != header:
            raise DataFormatError(
                f"invalid {what}: expected header {','.join(header)!r}, "
                f"got {','.join(first)!r}"
            )
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"invalid {what}: line {lineno} has {len(row)} fields"
                )
            try:
                out.append([float(v) for v in row])
            except ValueError as err:
                raise DataFormatError(f"invalid {what}: line {lineno}: {err}") from None
        return out

    if hasattr(path_or_file, "read"):
        return _read(path_or_file)
    with open(path_or_file, "r", encoding="utf-8", newline="") as fh:
        return _read(fh)


# -- windows (JSON) ----------------------------------------------------------


def save_window(window, path_or_file):
    spec = window.observed_spec
    if spec[0] == "full":
        observed = "full"
    elif spec[0] == "bands":
        observed = {"type": "bands", "rate": spec[1], "band_width": spec[2]}
    else:
        packed = np.packbits(window.mask.ravel().astype(np.uint8))
        observed = {
            "type": "mask",
            "shape": list(window.mask.shape),
            "packed": base64.b64encode(packed.tobytes()).decode("ascii"),
            "area_obs": window.area_obs,
        }
    doc = {
        "rect": [window.xmin, window.ymin, window.xmax, window.ymax],
        "resolution": int(window.mask.shape[0]),
        "observed": observed,
    }
    dump_json(doc, path_or_file)


def load_window(path_or_file):
    doc = load_json(path_or_file, "window file")
    validate_schema(doc, WINDOW_SCHEMA, "window file")
    rect = tuple(float(v) for v in doc["rect"])
    if rect[2] <= rect[0] or rect[3] <= rect[1]:
        raise DataFormatError("invalid window file: rect must have positive extent")
    resolution = int(doc.get("resolution", DEFAULT_MASK_RESOLUTION))
    observed = doc["observed"]
    if observed == "full":
        return Window.full(rect, resolution)
    if observed["type"] == "bands":
        return band_window(
            observed["rate"], observed["band_width"], rect=rect, resolution=resolution
        )
    ny, nx = observed["shape"]
    try:
        raw = base64.b64decode(observed["packed"], validate=True)
    except Exception as err:
        raise DataFormatError(f"invalid window file: bad base64 mask: {err}") from err
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=ny * nx)
    mask = bits.astype(bool).reshape(ny, nx)
    return Window.from_mask(rect, mask, area_obs=observed.get("area_obs"))


# -- grids, counts and surfaces ----------------------------------------------


def save_counts(counts, grid, path_or_file):
    doc = {
        "rect": [grid.window.xmin, grid.window.ymin, grid.window.xmax, grid.window.ymax],
        "cell_side": grid.cell_side,
        "nx": grid.nx,
        "ny": grid.ny,
        "counts": np.asarray(counts, dtype=int).tolist(),
    }
    dump_json(doc, path_or_file)


COUNTS_SCHEMA = {
    "type": "object",
    "properties": {
        "rect": _RECT_SCHEMA,
        "cell_side": {"type": "number", "exclusiveMinimum": 0},
        "nx": {"type": "integer", "minimum": 1},
        "ny": {"type": "integer", "minimum": 1},
        "counts": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
    },
    "required": ["rect", "cell_side", "nx", "ny", "counts"],
    "additionalProperties": False,
}


def load_counts(path_or_file):
    """Counts (ny, nx) plus the stored cell side and rectangle."""
    doc = load_json(path_or_file, "count grid")
    validate_schema(doc, COUNTS_SCHEMA, "count grid")
    counts = np.array(doc["counts"], dtype=np.int64)
    if counts.shape != (doc["ny"], doc["nx"]):
        raise DataFormatError(
            f"invalid count grid: counts shape {counts.shape} does not match "
            f"ny={doc['ny']}, nx={doc['nx']}"
        )
    return counts, float(doc["cell_side"]), tuple(float(v) for v in doc["rect"])


def save_surface_csv(values, grid, path_or_file):
    """Write per-cell values as ``x,y,value`` rows at the cell centres."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size != grid.n:
        raise InvalidArgumentError("surface length does not match the grid")
    centers = grid.centers()
    write_csv(
        path_or_file,
        ["x", "y", "value"],
        (
            [_fmt(cx), _fmt(cy), _fmt(v)]
            for (cx, cy), v in zip(centers, values)
        ),
    )


def load_surface_csv(path_or_file):
    rows = _read_csv(path_or_file, ["x", "y", "value"], "surface")
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    return arr[:, :2], arr[:, 2]


def save_pcf_csv(pcf, path_or_file):
    write_csv(
        path_or_file,
        ["r", "g"],
        ([_fmt(r), _fmt(g)] for r, g in zip(pcf.r, pcf.values)),
    )


def format_as_string(save, *args):
    """Render any of the ``save_*`` writers to a string (used by ``--out -``)."""
    buf = _io.StringIO()
    save(*args, buf)
    return buf.getvalue()
