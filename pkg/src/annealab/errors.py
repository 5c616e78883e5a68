"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (config 2, stability 3,
degeneracy 4), so raising the right class matters.
"""


class AnnealabError(Exception):
    """Base class for package errors."""


class ConfigError(AnnealabError):
    """Invalid experiment configuration or model definition file."""


class StabilityError(AnnealabError):
    """Integrator step-size guard violated, or NaN encountered mid-run."""


class DegeneracyError(AnnealabError):
    """A spectral gap fell below the degeneracy floor where a division by it
    (or by an excitation energy) was required."""


class MappingError(AnnealabError):
    """Similarity transform produced a non-symmetric matrix, or exponents
    exceeded the floating-point safe range."""
