"""Estimate the pair correlation function from point patterns and compare
with the true curve, for a clustered and for a Poisson process."""

import numpy as np

from ppkrige import (
    ThomasParams,
    Window,
    estimate_pcf,
    simulate_poisson,
    simulate_thomas,
    thomas_pcf,
)

window = Window.full()
params = ThomasParams(kappa=10, mu=50, sigma=0.05)
g_true = thomas_pcf(params)
rs = (0.02, 0.05, 0.1, 0.15, 0.2)

one = estimate_pcf(simulate_thomas(params, window, seed=7).pattern, window, r_max=0.25)
pois = estimate_pcf(simulate_poisson(500.0, window, seed=7), window, r_max=0.25)
many = np.array(
    [
        [
            float(estimate_pcf(
                simulate_thomas(params, window, seed=s).pattern, window, r_max=0.25
            )(r))
            for r in rs
        ]
        for s in range(20)
    ]
)

print(f"{'r':>6} {'g true':>8} {'1 pattern':>10} {'20-mean':>8} {'20-sd':>7} {'Poisson':>8}")
for j, r in enumerate(rs):
    print(
        f"{r:6.2f} {g_true(r):8.3f} {float(one(r)):10.3f}"
        f" {many[:, j].mean():8.3f} {many[:, j].std():7.3f} {float(pois(r)):8.3f}"
    )
print(
    "\na single clustered pattern pins g only roughly — the handful of"
    "\nclusters that dominate short distances makes the estimate at small r"
    "\nswing widely from pattern to pattern (see the 20-pattern spread)."
    "\nAveraged over patterns it lands near the truth, and the Poisson"
    "\nestimate stays flat around 1."
)
