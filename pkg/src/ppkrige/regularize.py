"""Count-field regularization: moments and covariances of grid counts.

Counting points per cell turns a point pattern into a random field Z(x) =
Φ(B ⊕ x), the natural bridge between point processes and geostatistics.  For
a stationary isotropic process with intensity λ and pair correlation g, the
count field over cells of area ν(B) has

    E[Φ(B)]            = λ ν(B)
    Cov(Φ(B), Φ(D))    = λ ν(B) 1{B=D} + λ² ∫_B ∫_D (g(x−y) − 1) dx dy

The double integral is approximated at one of three levels:

* ``"fine-integral"`` — m×m midpoint quadrature per cell (m = ``quad_points``),
* ``"midpoint"``      — λν(B)1{B=D} + λ²ν²(B)(g(r_ij) − 1) with r_ij the
  centre distance (the recommended default),
* ``"diagonal"``      — λν(B)1{B=D} only (pure Poisson structure).

The variogram of the count field (cells B = D + r) is

    2γ(r) = λ(ν(B∖D) + ν(D∖B))
            + λ²(∬_{B∖D×B∖D} g + ∬_{D∖B×D∖B} g − 2∬_{B∖D×D∖B} g)

computed here with exact rectangle decomposition of the set differences and
midpoint quadrature of g over rectangle pairs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPcfError,
    SingularCovarianceError,
)

logger = logging.getLogger(__name__)

APPROXIMATIONS = ("fine-integral", "midpoint", "diagonal")

#: Initial diagonal jitter, as a fraction of the mean diagonal entry.
JITTER_FRACTION = 1e-8
#: Jitter escalation factor and attempt cap before giving up.
JITTER_GROWTH = 10.0
MAX_JITTER_ATTEMPTS = 3


@dataclass(frozen=True)
class CountFieldModel:
    """Second-order model of the count field on a grid of cells.

    Parameters
    ----------
    lam : float
        Intensity of the underlying point process (points per unit area).
    pcf : PcfFunction
        Pair correlation function (closed-form or empirical).
    cell_area : float
        ν(B), the common area of the grid cells.
    approximation : str
        One of ``fine-integral``, ``midpoint``, ``diagonal``.
    quad_points : int
        Midpoint quadrature resolution per axis for ``fine-integral``.
    """

    lam: float
    pcf: object
    cell_area: float
    approximation: str = "midpoint"
    quad_points: int = 4

    def __post_init__(self):
        if not (self.lam > 0 and np.isfinite(self.lam)):
            raise InvalidArgumentError("lam must be positive and finite")
        if not (self.cell_area > 0 and np.isfinite(self.cell_area)):
            raise InvalidArgumentError("cell_area must be positive and finite")
        if self.approximation not in APPROXIMATIONS:
            raise InvalidArgumentError(
                f"approximation must be one of {APPROXIMATIONS}"
            )
        if self.quad_points < 1:
            raise InvalidArgumentError("quad_points must be at least 1")

    @property
    def cell_side(self):
        return float(np.sqrt(self.cell_area))

    @property
    def mean(self):
        """E[Φ(B)] = λ ν(B)."""
        return self.lam * self.cell_area


def count_field_mean(model):
    """Expected count per cell, λ ν(B)."""
    return model.mean


def _subcell_offsets(b, m):
    """Midpoint offsets of an m×m partition of a cell of side b, centred at 0."""
    o = ((np.arange(m) + 0.5) / m - 0.5) * b
    ox, oy = np.meshgrid(o, o)
    return np.column_stack([ox.ravel(), oy.ravel()])


def _mean_g_fine(pcf, deltas, b, m):
    """Mean of g over the product of two m×m subdivided cells at each lag.

    ``deltas`` has shape (k, 2) (centre-to-centre displacement); returns the
    quadrature value of (1/ν²) ∬ g for each lag.
    """
    offs = _subcell_offsets(b, m)
    diff = offs[None, :, :] - offs[:, None, :]  # subcell-pair displacements
    diff = diff.reshape(-1, 2)
    out = np.empty(len(deltas))
    for i, d in enumerate(np.atleast_2d(deltas)):
        dist = np.hypot(diff[:, 0] + d[0], diff[:, 1] + d[1])
        out[i] = pcf(dist).mean()
    return out


def count_covariance(model, center_i, center_j):
    """Covariance of the counts of two cells given their centres."""
    ci = np.asarray(center_i, dtype=float).reshape(2)
    cj = np.asarray(center_j, dtype=float).reshape(2)
    b = model.cell_side
    nu = model.cell_area
    delta = cj - ci
    same = np.hypot(*delta) < 1e-12 * b
    diag = model.lam * nu if same else 0.0
    if model.approximation == "diagonal":
        return diag
    if model.approximation == "midpoint":
        g = model.pcf(float(np.hypot(*delta)))
    else:
        g = _mean_g_fine(model.pcf, delta[None, :], b, model.quad_points)[0]
    if not np.isfinite(g):
        raise InvalidPcfError("pair correlation returned a non-finite value")
    return diag + model.lam**2 * nu**2 * (g - 1.0)


def covariance_lag_table(model, grid):
    """Off-diagonal covariance value per grid lag (Δiy, Δix), shape (ny, nx).

    On a regular grid the covariance of two cells depends only on their index
    lag; tabulating per lag makes assembly exactly symmetric and cheap.  The
    diagonal λν(B) term is *not* included.
    """
    b = grid.cell_side
    if abs(b * b - model.cell_area) > 1e-9 * model.cell_area:
        raise InvalidArgumentError("model cell_area does not match the grid")
    lags_x = np.arange(grid.nx) * b
    lags_y = np.arange(grid.ny) * b
    if model.approximation == "diagonal":
        return np.zeros((grid.ny, grid.nx))
    LX, LY = np.meshgrid(lags_x, lags_y)
    if model.approximation == "midpoint":
        g = model.pcf(np.hypot(LX, LY).ravel())
    else:
        deltas = np.column_stack([LX.ravel(), LY.ravel()])
        g = _mean_g_fine(model.pcf, deltas, b, model.quad_points)
    if not np.isfinite(g).all():
        raise InvalidPcfError("pair correlation returned non-finite values")
    table = model.lam**2 * model.cell_area**2 * (g - 1.0)
    return table.reshape(grid.ny, grid.nx)


@dataclass
class CovarianceMatrix:
    """Dense covariance matrix over the observed cells, with PD repair.

    ``factor()`` attempts a Cholesky factorization.  On failure the diagonal
    gets a small escalating jitter (a rounding-level repair).  If the matrix
    is structurally indefinite — empirical pair correlations carry no
    positive-definiteness guarantee, and a globally high or low count
    deflates or inflates the whole ĝ curve — the jitter cannot help; instead
    the structure part ``C − nugget·I`` is projected onto the PSD cone
    (negative eigenvalues clipped) while the Poisson nugget λν(B) is kept
    exact.  The repaired matrix is the nearest valid count-field covariance
    in Frobenius norm on the structure component, and its smallest eigenvalue
    is at least the nugget, so kriging weights stay bounded.  Matrices with
    non-finite entries or a non-positive trace are declared singular
    outright.  The factorization is cached and shared by all solves.
    """

    matrix: np.ndarray
    nugget: float = 0.0
    jitter: float = 0.0
    structure_clipped: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.matrix.shape[0]

    def factor(self):
        if "cho" in self._cache:
            return self._cache["cho"]
        if not np.isfinite(self.matrix).all():
            raise SingularCovarianceError("covariance has non-finite entries")
        try:
            cho = cho_factor(self.matrix, lower=True, check_finite=False)
            self.jitter = 0.0
        except LinAlgError:
            trace = float(np.trace(self.matrix))
            if trace <= 0.0:
                raise SingularCovarianceError(
                    "covariance has non-positive trace: not a covariance matrix"
                )
            floor = JITTER_FRACTION * trace / self.n
            jit = floor
            cho = None
            for _ in range(MAX_JITTER_ATTEMPTS):
                try:
                    cho = cho_factor(
                        self.matrix + jit * np.eye(self.n), lower=True, check_finite=False
                    )
                    self.jitter = jit
                    logger.warning(
                        "covariance not positive definite: diagonal loaded by %.3e",
                        jit,
                    )
                    break
                except LinAlgError:
                    jit *= JITTER_GROWTH
            if cho is None:
                cho = self._project_structure(floor)
        self._cache["cho"] = cho
        return cho

    def _project_structure(self, floor):
        """Clip the negative spectrum of the structure part, keep the nugget."""
        base = self.nugget if self.nugget > 0.0 else floor
        structure = self.matrix - base * np.eye(self.n)
        ev, vec = np.linalg.eigh(structure)
        repaired = (vec * np.clip(ev, 0.0, None)) @ vec.T
        repaired[np.diag_indices(self.n)] += base
        try:
            cho = cho_factor(repaired, lower=True, check_finite=False)
        except LinAlgError:
            raise SingularCovarianceError(
                "covariance not positive definite after structure repair"
            )
        self.structure_clipped = float(max(0.0, -ev[0]))
        logger.warning(
            "covariance structure indefinite (min structure eigenvalue %.3e): "
            "negative spectrum clipped, nugget %.3e kept",
            ev[0],
            base,
        )
        return cho

    def solve(self, rhs):
        return cho_solve(self.factor(), rhs, check_finite=False)


def assemble_covariance(model, grid):
    """Covariance matrix of the counts over the observed cells.

    Entries follow the model's approximation level; the matrix is symmetric
    by construction (values depend only on the index lag).
    """
    n_obs = grid.n_obs
    if n_obs < 2:
        raise InsufficientDataError("need at least two observed cells")
    table = covariance_lag_table(model, grid).ravel()
    flat = np.flatnonzero(grid.observed_flat)
    iy = (flat // grid.nx).astype(np.int32)
    ix = (flat % grid.nx).astype(np.int32)
    C = np.empty((n_obs, n_obs))
    for lo in range(0, n_obs, 512):
        hi = min(lo + 512, n_obs)
        diy = np.abs(iy[lo:hi, None] - iy[None, :])
        dix = np.abs(ix[lo:hi, None] - ix[None, :])
        C[lo:hi] = table[diy * grid.nx + dix]
    C[np.diag_indices(n_obs)] += model.mean
    return CovarianceMatrix(C, nugget=model.mean)


def _rect_quadrature(rect, b, m):
    """Midpoint nodes and weights over a rectangle, resolution ~ m per cell side."""
    x0, y0, x1, y1 = rect
    w, h = x1 - x0, y1 - y0
    nx = max(1, int(np.ceil(m * w / b)))
    ny = max(1, int(np.ceil(m * h / b)))
    xs = x0 + (np.arange(nx) + 0.5) * (w / nx)
    ys = y0 + (np.arange(ny) + 0.5) * (h / ny)
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    wt = (w / nx) * (h / ny)
    return pts, wt


def _rect_pair_integral(pcf, rect_a, rect_b, b, m):
    """∬_{A×B} g(x − y) dx dy by midpoint quadrature."""
    pa, wa = _rect_quadrature(rect_a, b, m)
    pb, wb = _rect_quadrature(rect_b, b, m)
    d = np.hypot(
        pa[:, None, 0] - pb[None, :, 0], pa[:, None, 1] - pb[None, :, 1]
    )
    return pcf(d.ravel()).sum() * wa * wb


def theoretical_variogram(model, lag, quad_points=12):
    """Variogram γ(r) of the count field for cells B = D + r.

    ``lag`` is a displacement vector (lx, ly).  Zero lag returns 0 by
    definition.  The set differences B∖D and D∖B are decomposed exactly into
    rectangles and g is integrated by midpoint quadrature (resolution
    ``quad_points`` nodes per cell side).
    """
    lag = np.asarray(lag, dtype=float).reshape(2)
    b = model.cell_side
    lam = model.lam
    dx, dy = abs(float(lag[0])), abs(float(lag[1]))
    if dx == 0.0 and dy == 0.0:
        return 0.0

    d_rect = (0.0, 0.0, b, b)
    b_rect = (dx, dy, dx + b, dy + b)
    if dx >= b or dy >= b:
        b_minus_d = [b_rect]
        d_minus_b = [d_rect]
    else:
        b_minus_d = []
        d_minus_b = []
        if dx > 0:
            b_minus_d.append((b, dy, b + dx, dy + b))
            d_minus_b.append((0.0, 0.0, dx, b))
        if dy > 0:
            b_minus_d.append((dx, b, b, b + dy))
            d_minus_b.append((dx, 0.0, b, dy))

    def _area(rects):
        return sum((r[2] - r[0]) * (r[3] - r[1]) for r in rects)

    def _set_pair_integral(set_a, set_b):
        return sum(
            _rect_pair_integral(model.pcf, ra, rb, b, quad_points)
            for ra in set_a
            for rb in set_b
        )

    two_gamma = lam * (_area(b_minus_d) + _area(d_minus_b)) + lam**2 * (
        _set_pair_integral(b_minus_d, b_minus_d)
        + _set_pair_integral(d_minus_b, d_minus_b)
        - 2.0 * _set_pair_integral(b_minus_d, d_minus_b)
    )
    return 0.5 * two_gamma


@dataclass(frozen=True)
class CountMoments:
    """Monte-Carlo moments of grid counts across realizations.

    ``counts`` has shape (n_sim, ny, nx).  All accessors return
    ``(estimate, standard_error)``.
    """

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 3 or c.shape[0] < 2:
            raise InvalidArgumentError("counts must be (n_sim, ny, nx) with n_sim >= 2")
        object.__setattr__(self, "counts", c)

    @property
    def n_sim(self):
        return self.counts.shape[0]

    def mean(self, iy, ix):
        x = self.counts[:, iy, ix]
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(self.n_sim))

    def variance(self, iy, ix):
        x = self.counts[:, iy, ix]
        dev = x - x.mean()
        m2 = (dev**2).mean()
        m4 = (dev**4).mean()
        var = x.var(ddof=1)
        se = np.sqrt(max(m4 - m2**2, 0.0) / self.n_sim)
        return float(var), float(se)

    def covariance(self, cell_i, cell_j):
        x = self.counts[:, cell_i[0], cell_i[1]]
        y = self.counts[:, cell_j[0], cell_j[1]]
        prods = (x - x.mean()) * (y - y.mean())
        n = self.n_sim
        cov = prods.sum() / (n - 1)
        se = prods.std(ddof=1) / np.sqrt(n)
        return float(cov), float(se)

    def variogram(self, lag_cells):
        """γ̂ at an index lag (di, dj): half the mean squared increment,
        pooled over valid cell pairs within each realization."""
        di, dj = int(lag_cells[0]), int(lag_cells[1])
        if di == 0 and dj == 0:
            raise InvalidArgumentError("zero lag has no variogram estimate")
        c = self.counts
        ny, nx = c.shape[1], c.shape[2]
        if abs(di) >= ny or abs(dj) >= nx:
            raise InvalidArgumentError("lag exceeds the grid")
        sl_y = slice(max(0, -di), ny - max(0, di))
        sl_x = slice(max(0, -dj), nx - max(0, dj))
        a = c[:, sl_y, sl_x]
        bshift = c[:, slice(max(0, di), ny - max(0, -di)), slice(max(0, dj), nx - max(0, -dj))]
        per_sim = 0.5 * ((a - bshift) ** 2).mean(axis=(1, 2))
        return float(per_sim.mean()), float(per_sim.std(ddof=1) / np.sqrt(self.n_sim))


def empirical_count_moments(count_stack):
    """Wrap a stack of per-realization count grids for moment estimation."""
    return CountMoments(np.asarray(count_stack))
