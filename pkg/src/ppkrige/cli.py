"""``ppkrige`` command line front end.

Subcommands: ``simulate``, ``estimate-pcf``, ``optimal-mesh``, ``krige``,
``experiment``.  Results go to files (or to stdout with ``--out -``);
stdout otherwise stays silent.  Exit status: 0 on success, 1 for usage or
argument errors, 2 for data errors (malformed files, degenerate inputs,
numerical failure).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from . import io as pio
from .errors import DataFormatError, InvalidArgumentError, PpkrigeError
from .experiment import ExperimentConfig, run_experiment
from .geometry import Window, build_grid, count_on_grid
from .kriging import krige_intensity
from .mesh import estimate_gradient_integral, optimal_mesh
from .pcf import estimate_pcf
from .regularize import APPROXIMATIONS, CountFieldModel
from .simulate import (
    ThomasParams,
    simulate_poisson,
    simulate_thomas,
    thomas_local_intensity,
    thomas_pcf,
)

log = logging.getLogger("ppkrige")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap that to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _out_target(path):
    return sys.stdout if path == "-" else path


def _load_window(path):
    if path is None:
        return Window.full()
    return pio.load_window(path)


def _build_parser():
    parser = _Parser(prog="ppkrige", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ppkrige {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="simulate a point pattern")
    p.add_argument("--model", choices=["thomas", "poisson"], default="thomas")
    p.add_argument("--kappa", type=float, default=10.0, help="parent intensity")
    p.add_argument("--mu", type=float, default=50.0, help="mean offspring per parent")
    p.add_argument("--sigma", type=float, default=0.05, help="offspring spread")
    p.add_argument("--lambda", dest="lam", type=float, default=100.0,
                   help="intensity of the poisson model")
    p.add_argument("--window", help="window JSON (default: unit square)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="pattern CSV ('-' for stdout)")
    p.add_argument("--parents-out", help="also write the parent pattern (thomas)")
    p.add_argument("--true-intensity-out",
                   help="also write the local intensity at grid centres (thomas)")
    p.add_argument("--grid-size", type=int, default=96,
                   help="grid for --true-intensity-out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate-pcf", parents=[common],
                       help="estimate the pair correlation function")
    p.add_argument("--pattern", required=True, help="pattern CSV")
    p.add_argument("--window", help="window JSON (default: unit square)")
    p.add_argument("--rmax", type=float, default=None,
                   help="maximum lag (default: diameter/4)")
    p.add_argument("--nr", type=int, default=128, help="number of lag bins")
    p.add_argument("--bandwidth", default="auto", help="kernel bandwidth or 'auto'")
    p.add_argument("--out", required=True, help="r,g CSV ('-' for stdout)")
    p.set_defaults(func=_cmd_estimate_pcf)

    p = sub.add_parser("optimal-mesh", parents=[common],
                       help="IMSE-optimal cell size for intensity estimation")
    p.add_argument("--pattern", required=True, help="pattern CSV")
    p.add_argument("--window", help="window JSON (default: unit square)")
    p.add_argument("--method", choices=["kernel", "counting", "knn"], default="kernel")
    p.add_argument("--n-grid", "--N", dest="n_grid", type=int, default=200,
                   help="evaluation grid for the gradient integral")
    p.add_argument("--bandwidth", default="auto", help="kernel bandwidth or 'auto'")
    p.add_argument("--k", type=int, default=None, help="neighbour count for knn")
    p.add_argument("--out", required=True, help="result JSON ('-' for stdout)")
    p.set_defaults(func=_cmd_optimal_mesh)

    p = sub.add_parser("krige", parents=[common],
                       help="krige the local intensity from cell counts")
    p.add_argument("--pattern", required=True, help="pattern CSV")
    p.add_argument("--window", help="window JSON (default: unit square)")
    p.add_argument("--cell-side", default="auto",
                   help="mesh cell side, or 'auto' for the IMSE-optimal one")
    p.add_argument("--pcf", choices=["empirical", "thomas"], default="empirical")
    p.add_argument("--kappa", type=float, default=None, help="thomas pcf parameter")
    p.add_argument("--sigma", type=float, default=None, help="thomas pcf parameter")
    p.add_argument("--rmax", type=float, default=None, help="empirical pcf max lag")
    p.add_argument("--nr", type=int, default=128, help="empirical pcf lag bins")
    p.add_argument("--targets", choices=["all", "observed", "unobserved"],
                   default="all")
    p.add_argument("--approximation", choices=list(APPROXIMATIONS),
                   default="midpoint")
    p.add_argument("--clamp-nonnegative", action=argparse.BooleanOptionalAction,
                   default=True, help="clamp negative intensities to zero")
    p.add_argument("--out", required=True, help="x,y,value CSV ('-' for stdout)")
    p.add_argument("--variance-out", help="also write the kriging variance")
    p.set_defaults(func=_cmd_krige)

    p = sub.add_parser("experiment", parents=[common],
                       help="run a simulation study from a config file")
    p.add_argument("--config", required=True, help="study config JSON")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.add_argument("--out", required=True, help="report JSON ('-' for stdout)")
    p.add_argument("--csv-out", help="also write a per-configuration CSV table")
    p.set_defaults(func=_cmd_experiment)
    return parser


def _cmd_simulate(args):
    window = _load_window(args.window)
    if args.model == "thomas":
        params = ThomasParams(args.kappa, args.mu, args.sigma)
        sim = simulate_thomas(params, window, args.seed)
        pattern = sim.pattern
    else:
        if args.parents_out or args.true_intensity_out:
            raise InvalidArgumentError(
                "--parents-out/--true-intensity-out apply to the thomas model only"
            )
        pattern = simulate_poisson(args.lam, window, args.seed)
        sim = None
    log.info("simulated %d points (%d observed)", pattern.n, pattern.n_observed())
    pio.save_pattern(pattern, _out_target(args.out))
    if args.parents_out:
        pio.save_pattern(sim.parents, _out_target(args.parents_out))
    if args.true_intensity_out:
        if args.grid_size < 1:
            raise InvalidArgumentError("--grid-size must be positive")
        grid = build_grid(window, window.width / args.grid_size)
        truth = thomas_local_intensity(sim, grid)
        pio.save_surface_csv(truth, grid, _out_target(args.true_intensity_out))
    return 0


def _cmd_estimate_pcf(args):
    window = _load_window(args.window)
    pattern = pio.load_pattern(args.pattern, window)
    bandwidth = args.bandwidth if args.bandwidth == "auto" else _parse_float(
        args.bandwidth, "--bandwidth")
    pcf = estimate_pcf(pattern, window, r_max=args.rmax, n_r=args.nr,
                       bandwidth=bandwidth)
    log.info("estimated g on %d lags up to %.4g (h=%.4g)",
             len(pcf.r), pcf.r_max, pcf.bandwidth)
    pio.save_pcf_csv(pcf, _out_target(args.out))
    return 0


def _cmd_optimal_mesh(args):
    window = _load_window(args.window)
    pattern = pio.load_pattern(args.pattern, window)
    bandwidth = args.bandwidth if args.bandwidth == "auto" else _parse_float(
        args.bandwidth, "--bandwidth")
    grad = estimate_gradient_integral(
        pattern, window, method=args.method, n_grid=args.n_grid,
        bandwidth=bandwidth, k=args.k,
    )
    lam_hat = pattern.n_observed() / window.area_obs
    mesh = optimal_mesh(lam_hat, window.area_obs, grad.grad_integral,
                        extent=(window.width, window.height))
    doc = {
        "nu_opt": mesh.nu_opt,
        "b": mesh.cell_side,
        "grid_nx": mesh.nx,
        "grid_ny": mesh.ny,
        "I_grad": grad.grad_integral,
        "lambda_hat": lam_hat,
        "method": grad.method,
        "n_grid": grad.n_grid,
        "bandwidth": grad.bandwidth,
        "k": grad.k,
    }
    log.info("optimal cell area %.4g (side %.4g)", mesh.nu_opt, mesh.cell_side)
    pio.dump_json(doc, _out_target(args.out))
    return 0


def _parse_float(text, flag):
    try:
        return float(text)
    except ValueError:
        raise InvalidArgumentError(f"{flag} must be a number") from None


def _cmd_krige(args):
    window = _load_window(args.window)
    pattern = pio.load_pattern(args.pattern, window)
    lam_hat = pattern.n_observed() / window.area_obs

    if args.cell_side == "auto":
        if not window.is_fully_observed:
            raise InvalidArgumentError(
                "--cell-side auto needs a fully observed window; "
                "pass an explicit cell side for prediction"
            )
        grad = estimate_gradient_integral(pattern, window)
        mesh = optimal_mesh(lam_hat, window.area_obs, grad.grad_integral,
                            extent=(window.width, window.height))
        cell_side = mesh.cell_side
        log.info("auto cell side %.4g (%dx%d grid)", cell_side, mesh.nx, mesh.ny)
    else:
        cell_side = _parse_float(args.cell_side, "--cell-side")

    if args.pcf == "thomas":
        if args.kappa is None or args.sigma is None:
            raise InvalidArgumentError("--pcf thomas needs --kappa and --sigma")
        pcf = thomas_pcf(ThomasParams(args.kappa, 1.0, args.sigma))
    else:
        pcf = estimate_pcf(pattern, window, r_max=args.rmax, n_r=args.nr)

    grid = build_grid(window, cell_side)
    counts = count_on_grid(pattern, grid)
    model = CountFieldModel(lam_hat, pcf, grid.cell_area,
                            approximation=args.approximation)
    surface = krige_intensity(model, grid, counts, targets=args.targets,
                              clamp_nonnegative=args.clamp_nonnegative)
    if surface.n_clamped:
        log.info("clamped %d negative intensities to zero", surface.n_clamped)
    pio.save_surface_csv(surface.intensity, grid, _out_target(args.out))
    if args.variance_out:
        pio.save_surface_csv(surface.variance, grid, _out_target(args.variance_out))
    return 0


def _cmd_experiment(args):
    doc = pio.load_json(args.config, "experiment config")
    pio.validate_schema(doc, pio.EXPERIMENT_CONFIG_SCHEMA, "experiment config")
    try:
        config = ExperimentConfig(**doc)
    except InvalidArgumentError as err:
        raise DataFormatError(f"invalid experiment config: {err}") from err
    report = run_experiment(config, n_jobs=args.jobs,
                            verbose=5 if args.verbose else 0)
    log.info("finished %d configurations in %.1fs",
             len(report.results), report.runtime_seconds)
    pio.dump_json(report.to_dict(), _out_target(args.out))
    if args.csv_out:
        rows = report.csv_rows()
        pio.write_csv(_out_target(args.csv_out), rows[0], rows[1:])
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InvalidArgumentError as err:
        print(f"ppkrige: error: {err}", file=sys.stderr)
        return 1
    except (PpkrigeError, OSError) as err:
        print(f"ppkrige: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
