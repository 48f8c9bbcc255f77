"""Low-rank completion of three-way tensors with per-mode covariance priors."""

from ._lrtc import (
    default_rank,
    effective_rank,
    error_db,
    estimate_priors,
    generate,
    mu_max,
    random_mask,
    recover_missing_slice,
    solve,
)

__all__ = [
    "default_rank",
    "effective_rank",
    "error_db",
    "estimate_priors",
    "generate",
    "mu_max",
    "random_mask",
    "recover_missing_slice",
    "solve",
]
