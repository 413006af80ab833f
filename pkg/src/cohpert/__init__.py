"""Perturbative analysis of coherent information for finite-dimensional
quantum channels: channel algebra in Kraus form, entropic quantities,
degenerate-eigenvalue perturbation machinery, suboptimality criteria, and
detectors for superadditivity of one-shot quantum capacity and for a
positive gap between one-shot private and quantum capacity.
"""

from .channels import (
    ChannelSpec,
    QuantumChannel,
    amplitude_damping_channel,
    apply,
    apply_matrix,
    builtin,
    channel_from_json,
    complement,
    depolarizing_channel,
    dephrasure_channel,
    erasure_channel,
    identity_channel,
    make_channel,
    pauli_channel,
    platypus_channel,
    tensor,
    tensor_all,
)
from .criteria import (
    CriterionReport,
    DetectorReport,
    check_criterion1,
    check_criterion2,
    check_criterion3,
    classify_first_order,
    complement_line_witness,
    detect_private_gap,
    detect_private_gap_via_complement,
    detect_superadditivity,
    threshold_scan,
)
from .errors import (
    CPTPError,
    DimensionError,
    HermiticityError,
    NoSignChangeError,
    PositivityError,
    RankCaseError,
)
from .info import (
    Ensemble,
    InfoValue,
    coherent_information,
    holevo_information,
    optimal_line_search,
    private_information,
    von_neumann_entropy,
)
from .linalg import (
    DensityMatrix,
    HermitianOperator,
    Projector,
    SpectralDecomposition,
    kernel_projector,
    psd_min_eig,
    reduced_resolvent,
    spectral_decompose,
)
from .perturbation import (
    DerivativeProfile,
    PerturbationFamily,
    admissible_radius,
    derivative_profile,
    f_eval,
    fd_derivatives,
    line_between,
    state_at,
    w0_trace,
    w_trace,
)
from .scenarios import ScenarioConfig, run_custom, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "CriterionReport",
    "CPTPError",
    "DensityMatrix",
    "DerivativeProfile",
    "DetectorReport",
    "DimensionError",
    "Ensemble",
    "HermitianOperator",
    "HermiticityError",
    "InfoValue",
    "NoSignChangeError",
    "PerturbationFamily",
    "PositivityError",
    "Projector",
    "QuantumChannel",
    "RankCaseError",
    "ScenarioConfig",
    "SpectralDecomposition",
    "admissible_radius",
    "amplitude_damping_channel",
    "apply",
    "apply_matrix",
    "builtin",
    "channel_from_json",
    "check_criterion1",
    "check_criterion2",
    "check_criterion3",
    "classify_first_order",
    "coherent_information",
    "complement",
    "complement_line_witness",
    "depolarizing_channel",
    "dephrasure_channel",
    "derivative_profile",
    "detect_private_gap",
    "detect_private_gap_via_complement",
    "detect_superadditivity",
    "erasure_channel",
    "f_eval",
    "fd_derivatives",
    "holevo_information",
    "identity_channel",
    "kernel_projector",
    "line_between",
    "make_channel",
    "optimal_line_search",
    "pauli_channel",
    "platypus_channel",
    "private_information",
    "psd_min_eig",
    "reduced_resolvent",
    "run_custom",
    "run_scenario",
    "spectral_decompose",
    "state_at",
    "tensor",
    "tensor_all",
    "threshold_scan",
    "von_neumann_entropy",
    "w0_trace",
    "w_trace",
]
