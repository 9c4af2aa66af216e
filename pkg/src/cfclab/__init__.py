"""cfclab: single-photon interferometer simulation and Fisher-information
analysis of counterfactual communication protocols."""

from .analysis import (
    DEFAULT_GRID,
    AsymptoticRegimeWarning,
    FisherReport,
    FullViolationReport,
    RepetitionPlan,
    SiteContribution,
    ViolationReport,
    asymptotic_regime_valid,
    d_vio_full_asymptotic,
    d_vio_full_simulated,
    d_vio_full_sum,
    d_vio_reduced,
    extrapolate_to_zero,
    fisher,
    fisher_limit,
    fisher_postselected,
    n_gamma,
    postselect,
    reference_fisher_limit,
    repetition_plan,
)
from .backends import DEFAULT_BACKEND, HAVE_COMPILED, available_backends
from .circuits import (
    BitProcess,
    Circuit,
    FullParams,
    ReducedParams,
    build_full,
    build_reduced,
    build_reference,
)
from .classical import ClassicalTranscript, generate_message, run_classical
from .errors import (
    CircuitConfigError,
    CircuitStructureError,
    FisherInconsistencyError,
    PostSelectionError,
    SizeGuardError,
)
from .optics import (
    BeamSplitter,
    DetectorBin,
    Mirror,
    OutcomeDistribution,
    PhasePlate,
    PhotonState,
    Polarization,
    Swap,
    Tagging,
    apply_element,
    propagate,
    propagate_state,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
