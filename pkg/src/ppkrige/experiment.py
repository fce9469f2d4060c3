"""Simulation study: kriging accuracy under partial observation.

Thomas-process realizations are observed through a vertical-band window,
counted on an N×N mesh, and the local intensity λ(x|U) is kriged at the
unobserved cell centres.  Accuracy against the true conditional intensity
(computed from the simulated parents) is summarised per configuration by

  * MB    — mean bias, averaged over unobserved cells then over runs;
  * MSEP  — mean squared error of prediction, same averaging;
  * R²    — squared correlation between predictions and truth per run,
            reported as median and quartiles.

The pair correlation is either the closed-form Thomas g (``known``) or
re-estimated per realization (``estimated``).  In the estimated mode the
band layout is tiled periodically to the right until the observed area
reaches exactly 1, the pattern is simulated and g estimated on that
extended window, and kriging happens on the unit-square restriction — so
both modes see one unit of observed area.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from numpy.random import SeedSequence

from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPcfError,
    PpkrigeError,
    SingularCovarianceError,
)
from .geometry import (
    DEFAULT_MASK_RESOLUTION,
    Window,
    band_window,
    build_grid,
    count_on_grid,
)
from .kriging import krige_intensity
from .pcf import estimate_pcf
from .regularize import CountFieldModel
from .simulate import ThomasParams, simulate_thomas, thomas_local_intensity, thomas_pcf

PCF_MODES = ("known", "estimated")

#: Configurations with more than this fraction of failed runs abort the study.
MAX_SKIP_FRACTION = 0.05

_EDGE_EPS = 1e-12


def r_squared(predicted, truth):
    """Squared Pearson correlation between predictions and truth.

    Needs at least three pairs; a constant truth leaves the quantity
    undefined and raises, while a constant prediction gives 0.
    """
    predicted = np.asarray(predicted, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if predicted.shape != truth.shape:
        raise InvalidArgumentError("predicted and truth must have the same length")
    if len(predicted) < 3:
        raise InsufficientDataError("need at least three pairs")
    if not (np.isfinite(predicted).all() and np.isfinite(truth).all()):
        raise InvalidArgumentError("r_squared requires finite values")
    if np.ptp(truth) == 0.0:
        raise InvalidArgumentError("truth is constant: R² is undefined")
    if np.ptp(predicted) == 0.0:
        return 0.0
    return float(np.corrcoef(predicted, truth)[0, 1] ** 2)


def extended_band_window(rate, band_width, resolution=DEFAULT_MASK_RESOLUTION):
    """Band layout tiled rightward until the observed area is exactly 1.

    The unit-square layout of :func:`band_window` (period ``1/k``, band of
    width ``band_width`` at the left end of each period) is continued
    periodically on ``[0, W] × [0, 1]`` and cut at the smallest ``W`` with
    observed area 1.  Restricting the result to the unit square reproduces
    the unit layout.
    """
    if not 0.0 < rate <= 1.0:
        raise InvalidArgumentError("rate must lie in (0, 1]")
    if rate == 1.0:
        return Window.full((0.0, 0.0, 1.0, 1.0), resolution)
    band_window(rate, band_width, resolution=64)  # validate the combination
    k = int(round((1.0 - rate) / band_width))
    period = 1.0 / k
    per_period_obs = period - band_width  # = rate / k
    n_exact = 1.0 / per_period_obs
    if abs(n_exact - round(n_exact)) < 1e-9:
        width = round(n_exact) * period
    else:
        n_full = int(n_exact)
        remaining = 1.0 - n_full * per_period_obs
        width = n_full * period + band_width + remaining

    res_x = int(round(resolution * width))
    centers = (np.arange(res_x) + 0.5) * width / res_x
    frac = centers - period * np.floor(centers / period)
    col_observed = frac >= band_width - _EDGE_EPS
    mask = np.broadcast_to(col_observed, (resolution, res_x)).copy()
    return Window.from_mask((0.0, 0.0, width, 1.0), mask, area_obs=1.0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Design of a simulation study (cross product of the three axes)."""

    rates: tuple = (0.5,)
    band_widths: tuple = (0.25,)
    grid_sizes: tuple = (24,)
    pcf_modes: tuple = ("known",)
    n_sim: int = 100
    kappa: float = 10.0
    mu: float = 50.0
    sigma: float = 0.05
    base_seed: int = 0
    r_max: float = 0.25
    n_r: int = 128

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "band_widths", tuple(float(w) for w in self.band_widths))
        object.__setattr__(self, "grid_sizes", tuple(int(n) for n in self.grid_sizes))
        object.__setattr__(self, "pcf_modes", tuple(self.pcf_modes))
        if self.n_sim < 2:
            raise InvalidArgumentError("n_sim must be at least 2")
        if not self.grid_sizes or any(n < 8 for n in self.grid_sizes):
            raise InvalidArgumentError("grid sizes must be at least 8")
        if not self.rates or not self.band_widths or not self.pcf_modes:
            raise InvalidArgumentError("rates, band_widths and pcf_modes must be non-empty")
        for mode in self.pcf_modes:
            if mode not in PCF_MODES:
                raise InvalidArgumentError(f"pcf mode must be one of {PCF_MODES}")
        for rate, bw in itertools.product(self.rates, self.band_widths):
            band_window(rate, bw, resolution=64)  # validate each combination
            if rate >= 1.0:
                raise InvalidArgumentError("study rates must leave some cells unobserved")
        if self.r_max <= 0 or self.n_r < 8:
            raise InvalidArgumentError("r_max must be positive and n_r at least 8")
        ThomasParams(self.kappa, self.mu, self.sigma)  # validate

    @property
    def params(self):
        return ThomasParams(self.kappa, self.mu, self.sigma)

    def cases(self):
        """Simulation cases (rate, band_width, pcf_mode), in report order."""
        return list(itertools.product(self.rates, self.band_widths, self.pcf_modes))

    def to_dict(self):
        return {
            "rates": list(self.rates),
            "band_widths": list(self.band_widths),
            "grid_sizes": list(self.grid_sizes),
            "pcf_modes": list(self.pcf_modes),
            "n_sim": self.n_sim,
            "kappa": self.kappa,
            "mu": self.mu,
            "sigma": self.sigma,
            "base_seed": self.base_seed,
            "r_max": self.r_max,
            "n_r": self.n_r,
        }


@dataclass(frozen=True)
class ConfigResult:
    """Accuracy summary for one (rate, band_width, pcf_mode, grid_size)."""

    rate: float
    band_width: float
    pcf_mode: str
    grid_size: int
    n_sim: int
    n_skipped: int
    mb: float
    mb_se: float
    msep: float
    msep_se: float
    r2_median: float
    r2_q1: float
    r2_q3: float
    r2_values: tuple = field(repr=False, default=())

    def to_dict(self):
        d = {k: getattr(self, k) for k in (
            "rate", "band_width", "pcf_mode", "grid_size", "n_sim", "n_skipped",
            "mb", "mb_se", "msep", "msep_se", "r2_median", "r2_q1", "r2_q3",
        )}
        d["r2_values"] = list(self.r2_values)
        return d


@dataclass(frozen=True)
class EvalReport:
    """Full study output: one :class:`ConfigResult` per configuration row."""

    config: ExperimentConfig
    results: tuple
    runtime_seconds: float

    def result_for(self, rate, band_width, pcf_mode, grid_size):
        for res in self.results:
            if (
                abs(res.rate - rate) < 1e-12
                and abs(res.band_width - band_width) < 1e-12
                and res.pcf_mode == pcf_mode
                and res.grid_size == grid_size
            ):
                return res
        raise KeyError((rate, band_width, pcf_mode, grid_size))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "results": [r.to_dict() for r in self.results],
            "runtime_seconds": self.runtime_seconds,
        }

    def csv_rows(self):
        header = [
            "rate", "band_width", "pcf_mode", "grid_size", "n_sim", "n_skipped",
            "mb", "mb_se", "msep", "msep_se", "r2_median", "r2_q1", "r2_q3",
        ]
        rows = [header]
        for r in self.results:
            d = r.to_dict()
            rows.append([d[k] for k in header])
        return rows


def _run_one_simulation(config, rate, band_width, pcf_mode, seed_seq):
    """One realization evaluated at every grid size.

    Returns ``{grid_size: (mean_err, mean_sq_err, r2) or None}``; ``None``
    throughout when the realization itself is unusable.
    """
    params = config.params
    unit_window = band_window(rate, band_width)
    none = {n: None for n in config.grid_sizes}
    try:
        if pcf_mode == "known":
            sim = simulate_thomas(params, unit_window, seed_seq)
            pattern = sim.pattern
            pcf = thomas_pcf(params)
        else:
            extended = extended_band_window(rate, band_width)
            sim = simulate_thomas(params, extended, seed_seq)
            pcf = estimate_pcf(sim.pattern, extended, r_max=config.r_max, n_r=config.n_r)
            pattern = sim.pattern.restricted(unit_window)
        n_obs = pattern.n_observed()
        if n_obs < 2:
            return none
        lam_hat = n_obs / unit_window.area_obs
    except (InsufficientDataError, InvalidPcfError):
        return none

    out = {}
    for n_grid in config.grid_sizes:
        try:
            grid = build_grid(unit_window, 1.0 / n_grid)
            counts = count_on_grid(pattern, grid)
            model = CountFieldModel(lam_hat, pcf, grid.cell_area)
            surface = krige_intensity(model, grid, counts, targets="unobserved")
            truth = thomas_local_intensity(sim, grid)
            unobs = ~grid.observed_flat
            pred = surface.intensity.ravel()[unobs]
            true_vals = truth.ravel()[unobs]
            if np.ptp(true_vals) == 0.0:
                out[n_grid] = None
                continue
            err = pred - true_vals
            out[n_grid] = (
                float(err.mean()),
                float((err**2).mean()),
                r_squared(pred, true_vals),
            )
        except (InsufficientDataError, SingularCovarianceError, InvalidPcfError):
            out[n_grid] = None
    return out


def _summarize(case, n_grid, per_sim, n_sim):
    rate, band_width, pcf_mode = case
    rows = [s[n_grid] for s in per_sim if s[n_grid] is not None]
    n_skipped = n_sim - len(rows)
    if n_skipped > MAX_SKIP_FRACTION * n_sim:
        raise PpkrigeError(
            f"{n_skipped}/{n_sim} runs failed for rate={rate:.4g}, "
            f"band_width={band_width:.4g}, {pcf_mode} g, grid {n_grid}"
        )
    errs = np.array([r[0] for r in rows])
    sqs = np.array([r[1] for r in rows])
    r2s = np.array([r[2] for r in rows])
    n_eff = len(rows)
    q1, med, q3 = np.percentile(r2s, [25.0, 50.0, 75.0])
    return ConfigResult(
        rate=rate,
        band_width=band_width,
        pcf_mode=pcf_mode,
        grid_size=n_grid,
        n_sim=n_sim,
        n_skipped=n_skipped,
        mb=float(errs.mean()),
        mb_se=float(errs.std(ddof=1) / np.sqrt(n_eff)),
        msep=float(sqs.mean()),
        msep_se=float(sqs.std(ddof=1) / np.sqrt(n_eff)),
        r2_median=float(med),
        r2_q1=float(q1),
        r2_q3=float(q3),
        r2_values=tuple(float(v) for v in r2s),
    )


def run_experiment(config, n_jobs=1, verbose=0):
    """Run the full study and summarise accuracy per configuration.

    Simulations are shared across grid sizes within each (rate, band_width,
    pcf_mode) case and seeded as ``SeedSequence([base_seed, case_index,
    sim_index])``, so the report is reproducible for any ``n_jobs``.
    Configurations where more than 5% of runs fail abort the study.
    """
    t0 = time.perf_counter()
    cases = config.cases()
    tasks = [
        (case_idx, case, sim_idx)
        for case_idx, case in enumerate(cases)
        for sim_idx in range(config.n_sim)
    ]
    per_task = Parallel(n_jobs=n_jobs, verbose=verbose)(
        delayed(_run_one_simulation)(
            config,
            case[0],
            case[1],
            case[2],
            SeedSequence([config.base_seed, case_idx, sim_idx]),
        )
        for case_idx, case, sim_idx in tasks
    )

    results = []
    for case_idx, case in enumerate(cases):
        per_sim = [
            per_task[i]
            for i, (ci, _, _) in enumerate(tasks)
            if ci == case_idx
        ]
        for n_grid in config.grid_sizes:
            results.append(_summarize(case, n_grid, per_sim, config.n_sim))
    return EvalReport(
        config=config,
        results=tuple(results),
        runtime_seconds=time.perf_counter() - t0,
    )
