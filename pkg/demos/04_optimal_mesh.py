"""Pick the IMSE-optimal cell size for a pattern, comparing the three
intensity-gradient estimators against the value computed from the truth."""

import numpy as np

from ppkrige import (
    ThomasParams,
    Window,
    estimate_gradient_integral,
    imse_estimate,
    optimal_mesh,
    simulate_thomas,
    thomas_intensity_gradient,
)

params = ThomasParams(kappa=10, mu=50, sigma=0.05)
window = Window.full()
sim = simulate_thomas(params, window, seed=3)
pattern = sim.pattern
lam_hat = pattern.n / 1.0
print(f"pattern with {pattern.n} points, lambda-hat = {lam_hat:.0f}")

# gradient integral from the true cluster-conditional intensity
res = 512
xs = (np.arange(res) + 0.5) / res
X, Y = np.meshgrid(xs, xs)
g = thomas_intensity_gradient(
    sim.parents, np.column_stack([X.ravel(), Y.ravel()]), params.mu, params.sigma
)
i_truth = float((g**2).sum(axis=1).mean())
truth_mesh = optimal_mesh(params.kappa * params.mu, 1.0, i_truth)
print(f"\ntruth:     I = {i_truth:12.4g}  ->  {truth_mesh.nx}x{truth_mesh.ny} cells "
      f"(side {truth_mesh.cell_side:.4f})")

for method in ("kernel", "knn", "counting"):
    est = estimate_gradient_integral(pattern, window, method=method)
    mesh = optimal_mesh(lam_hat, 1.0, est.grad_integral)
    extra = f", bandwidth {est.bandwidth:.4f}" if est.bandwidth else ""
    extra += f", k = {est.k}" if est.k else ""
    print(f"{method:9}: I = {est.grad_integral:12.4g}  ->  {mesh.nx}x{mesh.ny} cells "
          f"(side {mesh.cell_side:.4f}{extra})")

side = truth_mesh.cell_side
print("\nIMSE around the truth-based optimum (per unit area):")
for factor in (0.25, 0.5, 1.0, 2.0, 4.0):
    nu = (side * factor) ** 2
    print(f"  cell side {side * factor:.4f}:  {imse_estimate(lam_hat, 1.0, i_truth, nu):12.1f}")
print(
    "\nthe kernel estimate lands close to the truth-based mesh; that is the"
    "\ncalibrated default.  The alternatives bracket it by orders of"
    "\nmagnitude on clustered data: heavy knn smoothing flattens the"
    "\ngradient, while per-cell counting mistakes Poisson noise for"
    "\ngradient.  The IMSE curve is forgiving within a factor of two of the"
    "\noptimal cell side but costs nearly an order of magnitude at a factor"
    "\nof four."
)
