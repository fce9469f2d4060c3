"""Kriging-based intensity estimation and prediction for spatial point
processes observed on a mesh of counting cells.

A point pattern is reduced to counts on a regular grid; the count field is
a (regularized) random field whose mean and covariance follow from the
process intensity λ and pair correlation function g.  Ordinary kriging of
that field then gives the minimum-variance linear estimator of the local
intensity λ(x|U) at any cell centre — including centres in unobserved
regions — together with a closed-form kriging variance.
"""

from .errors import (
    DataFormatError,
    FlatIntensityError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidPcfError,
    PpkrigeError,
    SeriesDivergentError,
    SingularCovarianceError,
)
from .geometry import (
    ObservationGrid,
    PointPattern,
    Window,
    band_window,
    build_grid,
    count_on_grid,
)
from .simulate import (
    SimulatedRealization,
    ThomasParams,
    simulate_poisson,
    simulate_thomas,
    thomas_intensity_at,
    thomas_intensity_gradient,
    thomas_local_intensity,
    thomas_pcf,
)
from .pcf import (
    PcfFunction,
    estimate_pcf,
    stoyan_bandwidth,
    translation_weight,
)
from .regularize import (
    CountFieldModel,
    CountMoments,
    CovarianceMatrix,
    assemble_covariance,
    count_covariance,
    count_field_mean,
    covariance_lag_table,
    empirical_count_moments,
    theoretical_variogram,
)
from .kriging import (
    IntensitySurface,
    KrigingSystem,
    build_kriging_system,
    krige_intensity,
    kriging_variance,
    neumann_inverse,
    neumann_weights,
    solve_weights,
    variance_series,
)
from .mesh import (
    GradientEstimate,
    MeshChoice,
    diggle_bandwidth,
    estimate_gradient_integral,
    gradient_integral_from_surface,
    imse_estimate,
    optimal_mesh,
)
from .experiment import (
    ConfigResult,
    EvalReport,
    ExperimentConfig,
    extended_band_window,
    r_squared,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "PpkrigeError",
    "InvalidArgumentError",
    "InsufficientDataError",
    "DataFormatError",
    "InvalidPcfError",
    "SingularCovarianceError",
    "SeriesDivergentError",
    "FlatIntensityError",
    "Window",
    "PointPattern",
    "ObservationGrid",
    "band_window",
    "build_grid",
    "count_on_grid",
    "ThomasParams",
    "SimulatedRealization",
    "simulate_thomas",
    "simulate_poisson",
    "thomas_intensity_at",
    "thomas_intensity_gradient",
    "thomas_local_intensity",
    "thomas_pcf",
    "PcfFunction",
    "estimate_pcf",
    "stoyan_bandwidth",
    "translation_weight",
    "CountFieldModel",
    "CovarianceMatrix",
    "CountMoments",
    "count_field_mean",
    "count_covariance",
    "covariance_lag_table",
    "assemble_covariance",
    "theoretical_variogram",
    "empirical_count_moments",
    "KrigingSystem",
    "IntensitySurface",
    "build_kriging_system",
    "solve_weights",
    "kriging_variance",
    "krige_intensity",
    "neumann_inverse",
    "neumann_weights",
    "variance_series",
    "GradientEstimate",
    "MeshChoice",
    "estimate_gradient_integral",
    "gradient_integral_from_surface",
    "diggle_bandwidth",
    "optimal_mesh",
    "imse_estimate",
    "ExperimentConfig",
    "ConfigResult",
    "EvalReport",
    "extended_band_window",
    "r_squared",
    "run_experiment",
]
