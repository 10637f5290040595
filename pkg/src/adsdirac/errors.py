"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes (configuration -> 2,
regime -> 3, numeric -> 4), so library code should raise the most
specific class that applies.
"""


class AdsDiracError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(AdsDiracError):
    """Invalid user input: bad coordinates, malformed config, wrong shapes."""


class RegimeError(AdsDiracError):
    """Operation requested outside its mass/coupling regime of validity."""


class NumericError(AdsDiracError):
    """A numerical procedure failed to produce a trustworthy result."""


class ResolutionError(NumericError):
    """Quadrature or grid resolution is insufficient for the requested check."""


class PollutionError(NumericError):
    """Every eigenpair candidate was rejected by the residual filter."""


class InstabilityError(NumericError):
    """A refinement study diverged instead of settling."""
