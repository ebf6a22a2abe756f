"""Exception hierarchy for cavity_eit."""


class CavityEITError(Exception):
    """Base class for all package errors."""


class ParameterError(CavityEITError, ValueError):
    """Invalid physical parameters or inputs."""


class SingularResolventError(CavityEITError, ArithmeticError):
    """``omega*I - M_eff`` is singular (zero decay and omega on a real eigenvalue)."""


class ConvergenceError(CavityEITError, RuntimeError):
    """A numerical procedure did not reach its tolerance.

    ``achieved`` carries the residual or error estimate that was reached.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ResonantResummationError(CavityEITError, ArithmeticError):
    """The T-matrix resummation denominator vanished."""


class DegenerateSteadyStateError(CavityEITError, RuntimeError):
    """The Liouvillian null space is not one-dimensional."""


class BasisSizeError(CavityEITError, ValueError):
    """The truncated Fock basis exceeds the configured size limit."""


class NonPerturbativeError(CavityEITError, RuntimeError):
    """Log-log data shows curvature, i.e. the drive is outside the perturbative regime."""


class ConfigError(CavityEITError, ValueError):
    """Malformed or inconsistent run configuration."""
