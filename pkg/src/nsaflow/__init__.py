"""Non-negative, near-orthogonal matrix approximation and sparse PCA."""

__version__ = "0.1.0"

from .constraints import NonnegMode, nonneg_violation, project_nonneg, soft_threshold, softplus
from .errors import ConfigError, DegenerateInputError, DimensionError, NonFiniteError, NSAFlowError
from .flow import FlowConfig, FlowResult, TraceRecord, energy_slope, estimate_learning_rate, run_nsa_flow
from .geometry import RetractionMode, contraction_ratio, retract, tangent_project
from .linalg import finite_diff_grad, inv_sqrt_psd, polar_orthonormal, qr_orthonormalize, sym_eig
from .objective import (
    PenaltyMode,
    ScaleFactors,
    energy,
    energy_grad,
    fidelity_loss,
    grad_fidelity,
    grad_orth_invariant,
    grad_orth_raw,
    init_scale_factors,
    orth_defect_invariant,
    orth_penalty_raw,
)
from .optimizers import OptimizerKind, make_optimizer, optimizer_step
from .spca import (
    SpcaConfig,
    SpcaResult,
    armijo_search,
    center_columns,
    run_spca,
    spca_prox_basic,
    spca_prox_nsaflow,
    spca_smooth_grad,
)
from .synthetic import gen_synthetic

__all__ = [name for name in dir() if not name.startswith("_")]
