"""Exception types shared across the package.

Every error raised on purpose derives from :class:`PpkrigeError` so callers
(and the command line front end) can distinguish bad inputs from genuine
data problems.
"""


class PpkrigeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(PpkrigeError, ValueError):
    """An argument is outside its documented domain (bad shape, sign, range)."""


class InsufficientDataError(PpkrigeError):
    """Not enough points/cells to carry out the requested computation."""


class DataFormatError(PpkrigeError):
    """An input file is malformed (bad header, schema violation, parse error)."""


class InvalidPcfError(PpkrigeError):
    """A pair correlation function produced non-finite or inconsistent values."""


class SingularCovarianceError(PpkrigeError):
    """Covariance matrix not positive definite even after diagonal repair."""


class SeriesDivergentError(PpkrigeError):
    """Neumann series cannot converge (spectral radius >= 1)."""


class FlatIntensityError(PpkrigeError):
    """Gradient integral is zero: no curvature to trade off against noise."""
