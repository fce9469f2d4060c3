"""Observation windows, point patterns and regular count grids.

A :class:`Window` is a bounding rectangle together with a boolean raster mask
of the observed region ``S_obs`` (everything outside the mask is inside the
rectangle but unobserved).  A :class:`PointPattern` is a set of planar points
tied to a window.  An :class:`ObservationGrid` partitions the rectangle into
square cells of side ``b``; a cell is *observed* when its centre falls in the
mask.  Counting points per cell is what turns a point pattern into a field
amenable to kriging.

Masks use row-major orientation: ``mask[iy, ix]`` with ``iy`` increasing with
``y`` (row 0 is the bottom row) and ``ix`` increasing with ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidArgumentError

DEFAULT_MASK_RESOLUTION = 512
MIN_MASK_RESOLUTION = 64

#: Observation rates used throughout the partial-observation study:
#: 83%, 66%, 50%, 33% and 17% of the unit square (exact sixths, so that a
#: common band width of 1/6 exists for every rate).
STUDY_RATES = (5 / 6, 4 / 6, 3 / 6, 2 / 6, 1 / 6)

_EDGE_EPS = 1e-12


def _as_rect(rect):
    rect = tuple(float(v) for v in rect)
    if len(rect) != 4:
        raise InvalidArgumentError("rect must be (xmin, ymin, xmax, ymax)")
    xmin, ymin, xmax, ymax = rect
    if not all(math.isfinite(v) for v in rect):
        raise InvalidArgumentError("rect coordinates must be finite")
    if xmax <= xmin or ymax <= ymin:
        raise InvalidArgumentError("rect must have positive width and height")
    return rect


@dataclass(frozen=True)
class Window:
    """Bounding rectangle plus raster mask of the observed region.

    Parameters
    ----------
    rect : tuple
        ``(xmin, ymin, xmax, ymax)`` of the bounding rectangle.
    mask : ndarray of bool, shape (res_y, res_x)
        True where the pixel centre lies in ``S_obs``.
    area_obs : float
        Area of ``S_obs``.  Exact for analytically constructed windows
        (full rectangle, band layouts); pixel-count based otherwise.
    observed_spec : tuple
        Construction recipe, kept for lossless serialization:
        ``("full",)``, ``("bands", rate, band_width)`` or ``("mask",)``.
    """

    rect: tuple
    mask: np.ndarray
    area_obs: float
    observed_spec: tuple = ("mask",)
    _set_cov_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        _as_rect(self.rect)
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise InvalidArgumentError("mask must be 2-D")
        if min(mask.shape) < MIN_MASK_RESOLUTION:
            raise InvalidArgumentError(
                f"mask resolution must be at least {MIN_MASK_RESOLUTION} per axis"
            )
        if not mask.any():
            raise InvalidArgumentError("window has no observed area")
        object.__setattr__(self, "mask", mask)
        if not (0.0 < self.area_obs <= self.rect_area * (1 + 1e-9)):
            raise InvalidArgumentError("area_obs must lie in (0, rect area]")

    # -- basic geometry -------------------------------------------------

    @property
    def xmin(self):
        return self.rect[0]

    @property
    def ymin(self):
        return self.rect[1]

    @property
    def xmax(self):
        return self.rect[2]

    @property
    def ymax(self):
        return self.rect[3]

    @property
    def width(self):
        return self.rect[2] - self.rect[0]

    @property
    def height(self):
        return self.rect[3] - self.rect[1]

    @property
    def rect_area(self):
        return self.width * self.height

    @property
    def area_unobs(self):
        """Unobserved area; partitions the rectangle together with ``area_obs``."""
        return self.rect_area - self.area_obs

    @property
    def diameter(self):
        return math.hypot(self.width, self.height)

    @property
    def pixel_size(self):
        """(pixel width, pixel height) of the mask raster."""
        res_y, res_x = self.mask.shape
        return self.width / res_x, self.height / res_y

    @property
    def is_fully_observed(self):
        return bool(self.mask.all())

    # -- constructors ---------------------------------------------------

    @classmethod
    def full(cls, rect=(0.0, 0.0, 1.0, 1.0), resolution=DEFAULT_MASK_RESOLUTION):
        """Fully observed rectangle."""
        rect = _as_rect(rect)
        mask = np.ones((resolution, resolution), dtype=bool)
        area = (rect[2] - rect[0]) * (rect[3] - rect[1])
        return cls(rect, mask, area, observed_spec=("full",))

    @classmethod
    def from_mask(cls, rect, mask, area_obs=None):
        """Window from an arbitrary boolean mask.

        ``area_obs`` defaults to observed-pixel count times pixel area, which
        partitions the rectangle exactly.
        """
        rect = _as_rect(rect)
        mask = np.asarray(mask, dtype=bool)
        if area_obs is None:
            rect_area = (rect[2] - rect[0]) * (rect[3] - rect[1])
            area_obs = mask.sum() * rect_area / mask.size
        return cls(rect, mask, float(area_obs), observed_spec=("mask",))

    # -- point membership -------------------------------------------------

    def _pixel_indices(self, points):
        points = np.asarray(points, dtype=float)
        res_y, res_x = self.mask.shape
        ix = np.floor((points[:, 0] - self.xmin) / self.width * res_x).astype(int)
        iy = np.floor((points[:, 1] - self.ymin) / self.height * res_y).astype(int)
        np.clip(ix, 0, res_x - 1, out=ix)
        np.clip(iy, 0, res_y - 1, out=iy)
        return iy, ix

    def contains_obs(self, points):
        """Boolean array: which points (inside the rectangle) lie in ``S_obs``."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        iy, ix = self._pixel_indices(points)
        return self.mask[iy, ix]

    # -- set covariance / translation weights ----------------------------

    def _set_covariance_table(self):
        """Autocorrelation of the mask: observed-pixel overlap per pixel lag."""
        if "table" not in self._set_cov_cache:
            m = self.mask.astype(np.float64)
            table = fftconvolve(m, m[::-1, ::-1], mode="full")
            table = np.rint(table)
            np.clip(table, 0.0, None, out=table)
            self._set_cov_cache["table"] = table
        return self._set_cov_cache["table"]

    def translation_weights(self, displacements):
        """Fraction ν(S_obs ∩ (S_obs − d)) / ν(S_obs) for each displacement.

        Evaluated on the mask raster (bilinear interpolation between integer
        pixel lags), so the zero displacement returns exactly 1.
        """
        d = np.atleast_2d(np.asarray(displacements, dtype=float))
        table = self._set_covariance_table()
        res_y, res_x = self.mask.shape
        px_w, px_h = self.pixel_size
        cx = d[:, 0] / px_w + (res_x - 1)
        cy = d[:, 1] / px_h + (res_y - 1)
        x0 = np.floor(cx).astype(int)
        y0 = np.floor(cy).astype(int)
        fx = cx - x0
        fy = cy - y0
        out = np.zeros(len(d))
        ny, nx = table.shape

        def _pick(yy, xx):
            ok = (yy >= 0) & (yy < ny) & (xx >= 0) & (xx < nx)
            vals = np.zeros(len(d))
            vals[ok] = table[yy[ok], xx[ok]]
            return vals

        out = (
            _pick(y0, x0) * (1 - fx) * (1 - fy)
            + _pick(y0, x0 + 1) * fx * (1 - fy)
            + _pick(y0 + 1, x0) * (1 - fx) * fy
            + _pick(y0 + 1, x0 + 1) * fx * fy
        )
        return out / self.mask.sum()


def band_window(
    rate,
    band_width=None,
    rect=(0.0, 0.0, 1.0, 1.0),
    resolution=DEFAULT_MASK_RESOLUTION,
):
    """Window with vertical unobserved bands at regular spacing.

    The unobserved fraction ``1 - rate`` is split into ``k`` bands of width
    ``band_width`` (``k = (1 - rate) / band_width`` must be an integer).  The
    rectangle is divided into ``k`` equal periods and each band occupies the
    left end of its period, so e.g. ``rate=0.5, band_width=0.25`` hides
    ``[0, 0.25) ∪ [0.5, 0.75)`` of the unit square.  ``rate=1`` degenerates to
    the fully observed window.

    Parameters
    ----------
    rate : float
        Observed fraction of the rectangle, in ``(0, 1]``.
    band_width : float
        Width of each unobserved band (in x units).  Ignored when ``rate=1``.
    """
    rect = _as_rect(rect)
    if not 0.0 < rate <= 1.0:
        raise InvalidArgumentError("rate must lie in (0, 1]")
    if rate == 1.0:
        return Window.full(rect, resolution)
    if band_width is None or band_width <= 0:
        raise InvalidArgumentError("band_width must be positive for rate < 1")
    width = rect[2] - rect[0]
    unobs = (1.0 - rate) * width
    k_float = unobs / band_width
    k = int(round(k_float))
    if k < 1 or abs(k_float - k) > 1e-9:
        raise InvalidArgumentError(
            "band_width must divide the unobserved extent into an integer "
            f"number of bands (got {k_float:.6g})"
        )
    period = width / k
    if band_width > period * (1 + 1e-12):
        raise InvalidArgumentError("band_width exceeds the band period")

    res = resolution
    px_w = width / res
    centers = rect[0] + (np.arange(res) + 0.5) * px_w
    frac = (centers - rect[0]) - period * np.floor((centers - rect[0]) / period)
    col_observed = frac >= band_width - _EDGE_EPS
    mask = np.broadcast_to(col_observed, (res, res)).copy()
    area_obs = rate * width * (rect[3] - rect[1])
    return Window(rect, mask, area_obs, observed_spec=("bands", float(rate), float(band_width)))


@dataclass(frozen=True)
class PointPattern:
    """Planar point pattern inside a window's bounding rectangle."""

    points: np.ndarray
    window: Window

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not np.isfinite(pts).all():
            raise InvalidArgumentError("point coordinates must be finite")
        w = self.window
        eps = 1e-12 * max(1.0, w.diameter)
        inside = (
            (pts[:, 0] >= w.xmin - eps)
            & (pts[:, 0] <= w.xmax + eps)
            & (pts[:, 1] >= w.ymin - eps)
            & (pts[:, 1] <= w.ymax + eps)
        )
        if not inside.all():
            raise InvalidArgumentError(
                f"{(~inside).sum()} point(s) outside the bounding rectangle"
            )
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return len(self.points)

    def n_observed(self):
        """Number of points falling in the observed region."""
        if self.n == 0:
            return 0
        return int(self.window.contains_obs(self.points).sum())

    def observed_points(self):
        if self.n == 0:
            return self.points
        return self.points[self.window.contains_obs(self.points)]

    def restricted(self, window):
        """Pattern with the points falling inside another window's rectangle."""
        pts = self.points
        keep = (
            (pts[:, 0] >= window.xmin)
            & (pts[:, 0] <= window.xmax)
            & (pts[:, 1] >= window.ymin)
            & (pts[:, 1] <= window.ymax)
        )
        return PointPattern(pts[keep], window)


@dataclass(frozen=True)
class ObservationGrid:
    """Regular grid of square cells over a window's bounding rectangle.

    Cells are half-open ``[left, right) × [bottom, top)``; any margin left by
    a cell side that does not divide the rectangle exactly is dropped at the
    top/right.  A cell is observed iff its centre falls in the window mask.
    """

    window: Window
    cell_side: float
    nx: int
    ny: int
    observed: np.ndarray

    @property
    def x0(self):
        return self.window.xmin

    @property
    def y0(self):
        return self.window.ymin

    @property
    def n(self):
        return self.nx * self.ny

    @property
    def n_obs(self):
        return int(self.observed.sum())

    @property
    def cell_area(self):
        return self.cell_side * self.cell_side

    @property
    def centers_x(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.cell_side

    @property
    def centers_y(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.cell_side

    def centers(self):
        """All cell centres, flat row-major (y increasing, then x), shape (n, 2)."""
        cx, cy = np.meshgrid(self.centers_x, self.centers_y)
        return np.column_stack([cx.ravel(), cy.ravel()])

    @property
    def observed_flat(self):
        return self.observed.ravel()

    def observed_centers(self):
        return self.centers()[self.observed_flat]

    def cell_indices(self, points):
        """(iy, ix) per point; -1 where the point falls off the grid."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        ix = np.floor((pts[:, 0] - self.x0) / self.cell_side).astype(int)
        iy = np.floor((pts[:, 1] - self.y0) / self.cell_side).astype(int)
        bad = (ix < 0) | (ix >= self.nx) | (iy < 0) | (iy >= self.ny)
        ix[bad] = -1
        iy[bad] = -1
        return iy, ix


def build_grid(window, cell_side):
    """Grid of square cells of side ``cell_side`` anchored at the rectangle's
    lower-left corner; trailing partial cells are dropped.
    """
    cell_side = float(cell_side)
    if not (cell_side > 0 and math.isfinite(cell_side)):
        raise InvalidArgumentError("cell_side must be positive and finite")
    if cell_side > min(window.width, window.height) * (1 + 1e-9):
        raise InvalidArgumentError("cell_side exceeds the window extent")
    nx = int(math.floor(window.width / cell_side + 1e-9))
    ny = int(math.floor(window.height / cell_side + 1e-9))
    grid = ObservationGrid(window, cell_side, nx, ny, np.empty((ny, nx), dtype=bool))
    observed = window.contains_obs(grid.centers()).reshape(ny, nx)
    object.__setattr__(grid, "observed", observed)
    return grid


def count_on_grid(pattern, grid):
    """Count pattern points per grid cell.

    Returns an ``(ny, nx)`` integer array.  Points in the dropped top/right
    margin (outside every cell) are excluded.  The pattern and the grid must
    share the same window rectangle.
    """
    if not np.allclose(pattern.window.rect, grid.window.rect, rtol=0, atol=1e-12):
        raise InvalidArgumentError("pattern window and grid window do not coincide")
    counts = np.zeros((grid.ny, grid.nx), dtype=np.int64)
    if pattern.n == 0:
        return counts
    iy, ix = grid.cell_indices(pattern.points)
    ok = ix >= 0
    np.add.at(counts, (iy[ok], ix[ok]), 1)
    return counts
