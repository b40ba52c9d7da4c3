"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with code 2, a violated monotonicity condition exits with code 3.
"""


class PreintQmcError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PreintQmcError):
    """Invalid configuration value, unknown key, or malformed input file."""


class MonotonicityError(PreintQmcError):
    """The derivative of the quantity of interest with respect to the
    preintegration variable is not strictly positive (phi_0(z) <= 0),
    so the closed-form discontinuity location is undefined."""


class CoefficientOverflowError(PreintQmcError):
    """exp() of the log-coefficient produced non-finite values for an
    extreme parameter vector z."""


class SolverError(PreintQmcError):
    """Linear solve failed: iterative breakdown or residual above tolerance."""


class WeightDivergenceError(PreintQmcError):
    """A weight-function integral I_psi diverges for the requested argument
    (exponential weight with decay mu too small)."""


class DiracEvaluationError(PreintQmcError):
    """Density estimation was requested on a path where the Dirac delta
    cannot be evaluated (Monte Carlo without preintegration)."""
