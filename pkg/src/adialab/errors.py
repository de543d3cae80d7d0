"""Exception types shared across the package."""


class AdialabError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(AdialabError):
    """Matrix is singular or too close to singular for a stable inverse."""


class NonConvergenceWarning(UserWarning):
    """Power iteration did not converge; a flagged Frobenius fallback was returned."""


class OverflowRiskError(AdialabError):
    """Matrix exponential argument exceeds the configured norm cap."""


class DefectiveMatrixError(AdialabError):
    """Eigendecomposition failed its residual contract or eigenvalues nearly coincide."""


class GapTooSmallError(AdialabError):
    """Spectral gap below the configured minimum; reduced resolvent would blow up."""


class MatchingAmbiguousError(AdialabError):
    """Eigenpath label matching could not separate best and second-best overlaps."""


class ToleranceNotMetError(AdialabError):
    """Integrator could not verify the requested accuracy within the refinement cap."""


class QuadratureTooCoarseError(AdialabError):
    """Phase quadrature error estimate exceeds the requested budget."""


class BranchAmbiguityError(AdialabError):
    """Log-overlap step strayed too far from 1 to pick a branch; grid too coarse."""


class VanishingGaugeError(AdialabError):
    """Gauge scalar passes too close to zero somewhere on [0, 1]."""


class PathNotCyclicError(AdialabError):
    """Operation requires a cyclic path (H(1) = H(0))."""


class GaugeNotClosedError(AdialabError):
    """Endpoint eigenvectors do not close up even after phase adjustment."""


class NegativeBetaError(AdialabError):
    """Growth-rate samples must be non-negative."""


class InvalidParamsError(AdialabError):
    """Built-in path family received parameters outside their documented range."""


class HypothesesNotMetError(AdialabError):
    """Spectrum certificate failed and the run was not flagged diagnostic."""


class ConfigError(AdialabError):
    """Experiment configuration is malformed; message names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class ReportWriteError(AdialabError):
    """Report serialization could not be written to its destination."""
