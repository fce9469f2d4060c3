"""Ordinary kriging of the regularized count field.

Observed-cell counts Φ(B_i) are kriged to any target cell x_o through

    lambda_hat(x_o | U) = sum_i mu_i Φ(B_i) / ν(B)

with ordinary-kriging weights

    mu = C⁻¹ C_o + (1 − 1ᵀC⁻¹C_o) / (1ᵀC⁻¹1) · C⁻¹ 1

where C is the count covariance over observed cells and
``C_o = λν(B)·1{x_o observed} + λ²ν²(B)(G_o − 1)``.  Weights are obtained by
two solves against a single shared Cholesky factorization, never by explicit
inversion.  The prediction variance has the closed form

    Var = (1/ν²(B)) { C_oᵀC⁻¹C_o + (1 − 1ᵀC⁻¹C_o)² / (1ᵀC⁻¹1) }.

A Neumann-series inverse (valid when the spectral radius of λν(B)(G−1) is
below 1, i.e. λν(B) → 0) is provided as a diagnostic path, together with the
truncated-series variance expansions it induces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, InvalidArgumentError, SeriesDivergentError
from .regularize import CovarianceMatrix, assemble_covariance, covariance_lag_table

logger = logging.getLogger(__name__)

#: Variance values below -VARIANCE_FLOOR_TOL * λ/ν(B) trigger a warning
#: before being floored at zero.
VARIANCE_FLOOR_TOL = 1e-8


@dataclass
class KrigingSystem:
    """Assembled kriging system: covariance over observed cells plus the
    quantities shared by every target (C⁻¹1 and its sum)."""

    model: object
    grid: object
    cov: CovarianceMatrix
    obs_indices: np.ndarray
    _lag_table: np.ndarray = field(repr=False, default=None)
    _z: np.ndarray = field(repr=False, default=None)

    @property
    def n_obs(self):
        return len(self.obs_indices)

    @property
    def z(self):
        """C⁻¹ 1, cached."""
        if self._z is None:
            self._z = self.cov.solve(np.ones(self.n_obs))
        return self._z

    @property
    def one_z(self):
        return float(self.z.sum())

    def covariance_vectors(self, target_indices):
        """C_o for each target (flat cell index), shape (n_targets, n_obs).

        Observed targets get the extra λν(B) spike at their own position;
        the indicator part is identically zero for unobserved targets.
        """
        t = np.asarray(target_indices, dtype=int)
        nx = self.grid.nx
        table = self._lag_table.ravel()
        oy = (self.obs_indices // nx).astype(np.int32)
        ox = (self.obs_indices % nx).astype(np.int32)
        ty = (t // nx).astype(np.int32)
        tx = (t % nx).astype(np.int32)
        c_o = table[
            np.abs(ty[:, None] - oy[None, :]) * nx + np.abs(tx[:, None] - ox[None, :])
        ]
        pos = {int(idx): k for k, idx in enumerate(self.obs_indices)}
        for row, idx in enumerate(t):
            k = pos.get(int(idx))
            if k is not None:
                c_o[row, k] += self.model.mean
        return c_o


def build_kriging_system(model, grid):
    """Assemble and wrap the covariance over observed cells."""
    if grid.n_obs < 2:
        raise InsufficientDataError("need at least two observed cells")
    cov = assemble_covariance(model, grid)
    obs = np.flatnonzero(grid.observed_flat)
    return KrigingSystem(model, grid, cov, obs, covariance_lag_table(model, grid))


def solve_weights(cov, c_o):
    """Ordinary-kriging weights for one target (or a batch).

    ``c_o`` may be a vector (n_obs,) or a matrix (n_targets, n_obs); the
    result has the same leading shape.  Two solves against the shared
    factorization; the weights sum to 1 by construction.
    """
    c_o = np.asarray(c_o, dtype=float)
    single = c_o.ndim == 1
    rhs = c_o[None, :] if single else c_o
    if rhs.shape[1] != cov.n:
        raise InvalidArgumentError("covariance vector length does not match the system")
    y = cov.solve(rhs.T)  # (n_obs, n_targets)
    z = cov.solve(np.ones(cov.n))
    alpha = (1.0 - y.sum(axis=0)) / z.sum()
    mu = (y + z[:, None] * alpha[None, :]).T
    return mu[0] if single else mu


def kriging_variance(model, cov, c_o):
    """Closed-form kriging variance for one target (or a batch)."""
    c_o = np.asarray(c_o, dtype=float)
    single = c_o.ndim == 1
    rhs = c_o[None, :] if single else c_o
    y = cov.solve(rhs.T)
    z = cov.solve(np.ones(cov.n))
    quad = np.einsum("ij,ji->i", rhs, y)
    lagrange = (1.0 - y.sum(axis=0)) ** 2 / z.sum()
    var = (quad + lagrange) / model.cell_area**2
    return float(var[0]) if single else var


@dataclass(frozen=True)
class IntensitySurface:
    """Kriged intensity over the grid.

    ``intensity`` and ``variance`` are (ny, nx) arrays, NaN outside the
    requested targets.  ``estimated`` marks cells treated in estimation mode
    (observed targets); the remaining targets are predictions.
    """

    grid: object
    intensity: np.ndarray
    variance: np.ndarray
    target_mask: np.ndarray
    estimated: np.ndarray
    n_clamped: int = 0

    def values_at(self, flat_indices):
        return self.intensity.ravel()[np.asarray(flat_indices, dtype=int)]


def _resolve_targets(grid, targets):
    if isinstance(targets, str):
        if targets == "all":
            return np.arange(grid.n)
        if targets == "observed":
            return np.flatnonzero(grid.observed_flat)
        if targets == "unobserved":
            return np.flatnonzero(~grid.observed_flat)
        raise InvalidArgumentError(f"unknown target selector {targets!r}")
    t = np.asarray(targets, dtype=int)
    if t.ndim != 1 or (t < 0).any() or (t >= grid.n).any():
        raise InvalidArgumentError("target indices out of range")
    return t


def krige_intensity(
    model,
    grid,
    counts,
    targets="all",
    clamp_nonnegative=False,
    block_size=1024,
    system=None,
):
    """Krige the per-cell intensity from observed counts.

    Parameters
    ----------
    model : CountFieldModel
    grid : ObservationGrid
    counts : (ny, nx) array
        Counts per cell; only observed cells are used.
    targets : "all" | "observed" | "unobserved" | flat indices
    clamp_nonnegative : bool
        Clamp negative predictions at 0 (off by default: raw values are
        needed for bias studies).
    system : KrigingSystem, optional
        Reuse a previously assembled/factorized system.

    Returns
    -------
    IntensitySurface
    """
    counts = np.asarray(counts)
    if counts.shape != (grid.ny, grid.nx):
        raise InvalidArgumentError("counts shape does not match the grid")
    if system is None:
        system = build_kriging_system(model, grid)
    t_idx = _resolve_targets(grid, targets)
    nu = model.cell_area
    counts_obs = counts.ravel()[system.obs_indices].astype(float)

    z = system.z
    one_z = system.one_z
    cz = float(counts_obs @ z)

    lam_hat = np.full(grid.n, np.nan)
    var_hat = np.full(grid.n, np.nan)
    for lo in range(0, len(t_idx), block_size):
        chunk = t_idx[lo : lo + block_size]
        c_o = system.covariance_vectors(chunk)
        y = system.cov.solve(c_o.T)  # (n_obs, chunk)
        resid = 1.0 - y.sum(axis=0)
        alpha = resid / one_z
        lam_hat[chunk] = (counts_obs @ y + cz * alpha) / nu
        var_hat[chunk] = (np.einsum("ij,ji->i", c_o, y) + resid**2 / one_z) / nu**2

    # floor tiny negative variances produced by cancellation
    neg = var_hat < 0
    if neg.any():
        worst = var_hat[neg].min()
        if worst < -VARIANCE_FLOOR_TOL * model.lam / nu:
            logger.warning(
                "kriging variance floored at 0 (worst %.3e, tolerance %.3e)",
                worst,
                -VARIANCE_FLOOR_TOL * model.lam / nu,
            )
        var_hat[neg] = 0.0

    n_clamped = 0
    if clamp_nonnegative:
        sel = lam_hat < 0
        n_clamped = int(np.count_nonzero(sel & np.isfinite(lam_hat)))
        lam_hat[sel] = 0.0

    target_mask = np.zeros(grid.n, dtype=bool)
    target_mask[t_idx] = True
    estimated = target_mask & grid.observed_flat
    return IntensitySurface(
        grid,
        lam_hat.reshape(grid.ny, grid.nx),
        var_hat.reshape(grid.ny, grid.nx),
        target_mask.reshape(grid.ny, grid.nx),
        estimated.reshape(grid.ny, grid.nx),
        n_clamped,
    )


def _spectral_radius(M, seed=0, iters=200, tol=1e-12):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[0])
    v /= np.linalg.norm(v)
    radius = 0.0
    for _ in range(iters):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        if abs(nrm - radius) <= tol * max(1.0, nrm):
            return nrm
        radius = nrm
        v = w / nrm
    return radius


def neumann_inverse(model, cov, order, seed=0):
    """Truncated Neumann-series approximation of C⁻¹.

    With C = λν(B)[I + λν(B)(G−1)], the inverse expands as

        C⁻¹ ≈ (1/λν(B)) Σ_{k=0}^{order} (−λν(B))^k (G−1)^k

    valid when the spectral radius of λν(B)(G−1) is below 1 (checked by
    power iteration; raises otherwise).
    """
    if order < 1:
        raise InvalidArgumentError("order must be at least 1")
    lnu = model.mean
    M = cov.matrix / lnu - np.eye(cov.n)  # λν(B)(G−1)
    radius = _spectral_radius(M, seed=seed)
    if radius >= 1.0:
        raise SeriesDivergentError(
            f"spectral radius {radius:.3f} >= 1: series diverges, use the direct solve"
        )
    acc = np.eye(cov.n)
    term = np.eye(cov.n)
    for _ in range(order):
        term = -term @ M
        acc += term
    return acc / lnu


def neumann_weights(model, cov, c_o, order, seed=0):
    """Ordinary-kriging weights computed through the Neumann inverse
    (diagnostic path; the production path uses the direct factorization)."""
    c_inv = neumann_inverse(model, cov, order, seed=seed)
    c_o = np.asarray(c_o, dtype=float)
    y = c_inv @ c_o
    z = c_inv @ np.ones(cov.n)
    return y + (1.0 - y.sum()) / z.sum() * z


def _apply_series_kernel(M, v, lnu, order):
    """J v where J = Σ_{k=1..order} (−1)^k (λν)^{k−1} (G−1)^k, M = (G−1)."""
    out = np.zeros_like(v)
    w = v.copy()
    coef = 1.0
    for k in range(1, order + 1):
        w = M @ w
        sign = -1.0 if k % 2 else 1.0
        out += sign * coef * w
        coef *= lnu
    return out


def variance_series(model, cov, g_o, area_obs, observed_position=None, order=3):
    """Truncated-series kriging variance (diagnostic approximation).

    Expands the closed-form variance with C⁻¹ replaced by the truncated
    Neumann inverse, using the series kernel J = Σ_k (−1)^k (λν)^(k−1)(G−1)^k:

    estimation (observed target, indicator at ``observed_position``):
        λ/ν + λ²JT_oo + 2λ²γ_o[pos] + 2λ³ν 1{o}ᵀJγ_o + λ³ν γ_oᵀγ_o
            + λ⁴ν² γ_oᵀJγ_o + Lagrange part
    prediction (``observed_position=None``): the terms without the indicator.

    Only a leading-order diagnostic: cross terms beyond the truncation are
    dropped with the series tail.
    """
    lam = model.lam
    nu = model.cell_area
    lnu = lam * nu
    n = cov.n
    M = (cov.matrix - lnu * np.eye(n)) / (lam**2 * nu**2)  # (G − 1)
    gamma_o = np.asarray(g_o, dtype=float) - 1.0
    ones = np.ones(n)

    j_gamma = _apply_series_kernel(M, gamma_o, lnu, order)
    j_ones = _apply_series_kernel(M, ones, lnu, order)
    one_j_one = float(ones @ j_ones)
    one_gamma = float(ones @ gamma_o)
    one_j_gamma = float(ones @ j_gamma)

    denom = area_obs / lam + nu**2 * one_j_one

    if observed_position is None:
        quad = lam**3 * nu * float(gamma_o @ gamma_o) + lam**4 * nu**2 * float(
            gamma_o @ j_gamma
        )
        one_c_inv_co = lnu * one_gamma + lnu**2 * one_j_gamma
    else:
        ind = np.zeros(n)
        ind[observed_position] = 1.0
        j_ind = _apply_series_kernel(M, ind, lnu, order)
        quad = (
            lam / nu
            + lam**2 * float(ind @ j_ind)
            + 2.0 * lam**2 * float(gamma_o[observed_position])
            + 2.0 * lam**3 * nu * float(ind @ j_gamma)
            + lam**3 * nu * float(gamma_o @ gamma_o)
            + lam**4 * nu**2 * float(gamma_o @ j_gamma)
        )
        one_c_inv_co = 1.0 + lnu * float(ones @ j_ind) + lnu * one_gamma + lnu**2 * one_j_gamma

    return quad + (1.0 - one_c_inv_co) ** 2 / denom
