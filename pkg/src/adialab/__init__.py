"""Numerical laboratory for adiabatic following in non-Hermitian systems.

Builds biorthogonal eigensystems of smoothly driven Hamiltonians with
real non-degenerate spectra, propagates the rescaled evolution equation,
and verifies the slow-driving limit: complex geometric phase, O(1/T)
error decay, and T-independent certified bounds on the propagator pair.
"""

from .adiabatic import (
    ConvergenceReport,
    CyclicPhaseSplit,
    PhaseRecord,
    adiabatic_error,
    berry_phase,
    convergence_study,
    cyclic_phase_extract,
    dynamic_phase,
    gauge_invariance_check,
    phase_record,
    predicted_state,
    random_gauge_scalar,
)
from .errors import (
    AdialabError,
    BranchAmbiguityError,
    ConfigError,
    DefectiveMatrixError,
    GapTooSmallError,
    GaugeNotClosedError,
    HypothesesNotMetError,
    InvalidParamsError,
    MatchingAmbiguousError,
    NegativeBetaError,
    NonConvergenceWarning,
    OverflowRiskError,
    PathNotCyclicError,
    QuadratureTooCoarseError,
    ReportWriteError,
    SingularMatrixError,
    ToleranceNotMetError,
    VanishingGaugeError,
)
from .hampath import (
    HamiltonianPath,
    Profile,
    SpectrumCertificate,
    make_builtin_path,
    make_profile,
    validate_spectrum,
)
from .numkernel import EigenDecomposition, eig, mat_exp, mat_inverse, spectral_norm
from .propagator import (
    BoundCertificate,
    PropagatorTrace,
    bound_certificate,
    bound_monitor,
    certify_bounds,
    gronwall_bound,
    invert_check,
    propagate,
)
from .spectral import (
    EigenPath,
    EigenSystem,
    biorthogonal_dual,
    continue_eigenpath,
    eigenpath_derivative,
    reduced_resolvent,
)

__version__ = "0.1.0"
