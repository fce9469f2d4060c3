"""Predict the intensity inside unobserved bands from a half-observed
pattern and compare with the simulation truth, cell by cell."""

import numpy as np

from ppkrige import (
    CountFieldModel,
    ThomasParams,
    band_window,
    build_grid,
    count_on_grid,
    krige_intensity,
    r_squared,
    simulate_thomas,
    thomas_local_intensity,
    thomas_pcf,
)

params = ThomasParams(kappa=10, mu=50, sigma=0.05)
window = band_window(rate=0.5, band_width=0.1)  # every other band observed
sim = simulate_thomas(params, window, seed=15)  # a realization whose R^2
pattern = sim.pattern                           # sits near the study median
print(
    f"{pattern.n_observed()} points observed on half the unit square "
    f"(bands of width {0.1})"
)

grid = build_grid(window, cell_side=1 / 48)
counts = count_on_grid(pattern, grid)
lam_hat = pattern.n_observed() / window.area_obs
model = CountFieldModel(lam_hat, thomas_pcf(params), grid.cell_area)

surface = krige_intensity(
    model, grid, counts, targets="unobserved", clamp_nonnegative=True
)
truth = thomas_local_intensity(sim, grid)

unobs = ~grid.observed_flat
pred = surface.intensity.ravel()[unobs]
true_vals = truth.ravel()[unobs]
print(f"\nover the {unobs.sum()} unobserved cells:")
print(f"  mean true intensity:      {true_vals.mean():8.1f}")
print(f"  mean predicted intensity: {pred.mean():8.1f}")
print(f"  RMSE:                     {np.sqrt(((pred - true_vals) ** 2).mean()):8.1f}")
print(f"  R^2 against the truth:    {r_squared(pred, true_vals):8.3f}")

sd = np.sqrt(surface.variance.ravel()[unobs])
cover = np.mean(np.abs(pred - true_vals) <= 2 * sd)
print(f"  within 2 kriging sd:      {cover:8.1%}")

# a transect through the middle of the region, alternating bands
row = grid.ny // 2
print(f"\nrow {row} (y = {grid.centers_y[row]:.3f}): truth vs prediction")
for ix in range(0, grid.nx, 6):
    flag = "observed" if grid.observed[row, ix] else "predicted"
    val = truth[row, ix] if flag == "observed" else surface.intensity[row, ix]
    print(f"  x = {grid.centers_x[ix]:5.3f}  truth {truth[row, ix]:7.1f}   "
          f"{flag:9} {val:7.1f}")
