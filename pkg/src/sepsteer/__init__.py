"""Gaussian-state toolkit for distributing EPR steering through separable ancillas."""

from .correlations import (
    ModePartition,
    epr_variance_product,
    gaussian_steering,
    is_entangled_across,
    partial_transpose,
    ppt_min_eigenvalue,
    steering,
)
from .errors import BracketError, DegenerateInput, DomainError, InvalidArgument
from .gaussian import (
    CovarianceMatrix,
    NoiseMatrix,
    Quadrature,
    beam_splitter,
    is_physical,
    squeezed_vacuum,
    symplectic_eigenvalues,
    tensor,
    vacuum,
)
from .protocols import (
    Direction,
    ProtocolParams,
    Stage,
    ThresholdKind,
    analytic_threshold,
    build_stage,
    closed_form_steering,
    optimal_displacements,
    qss_key_rate,
    reference_network,
)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "DegenerateInput",
    "DomainError",
    "InvalidArgument",
    "ModePartition",
    "epr_variance_product",
    "gaussian_steering",
    "is_entangled_across",
    "partial_transpose",
    "ppt_min_eigenvalue",
    "steering",
    "CovarianceMatrix",
    "NoiseMatrix",
    "Quadrature",
    "beam_splitter",
    "is_physical",
    "squeezed_vacuum",
    "symplectic_eigenvalues",
    "tensor",
    "vacuum",
    "Direction",
    "ProtocolParams",
    "Stage",
    "ThresholdKind",
    "analytic_threshold",
    "build_stage",
    "closed_form_steering",
    "optimal_displacements",
    "qss_key_rate",
    "reference_network",
]
