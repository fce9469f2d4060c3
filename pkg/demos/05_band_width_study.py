"""A miniature band-width study: how prediction accuracy degrades as the
unobserved bands get wider at a fixed 50% observation rate.  The full-size
version runs in the acceptance tests; this one uses 20 simulations per case
and finishes in well under a minute."""

from ppkrige import ExperimentConfig, run_experiment

config = ExperimentConfig(
    rates=(1 / 2,),
    band_widths=(1 / 2, 1 / 4, 1 / 10),
    grid_sizes=(24, 48),
    pcf_modes=("known",),
    n_sim=20,
    base_seed=5,
)
report = run_experiment(config)

print(f"{config.n_sim} simulations per case, {report.runtime_seconds:.0f}s total\n")
print(f"{'width':>6} {'grid':>6} {'MB':>8} {'MSEP':>10} {'median R2':>10}")
for res in report.results:
    print(
        f"{res.band_width:6.2f} {res.grid_size:4d}^2 {res.mb:8.1f} {res.msep:10.0f}"
        f" {res.r2_median:10.3f}"
    )
print(
    "\nwith half the square observed either way, a few wide gaps are much"
    "\nharder to fill than many narrow ones: whole clusters can hide inside"
    "\na wide band, while narrow bands always have data close by.  Squared"
    "\nbias contributes about a percent of the MSEP at most; the error is"
    "\nessentially all prediction variance."
)
