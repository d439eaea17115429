"""Regularized ensemble forecasting."""

from ._refcast import (
    InputError,
    RefcastError,
    ccr_prior,
    ccr_raw_weights,
    closed_form_identity_l2,
    delta_rmsse,
    objective,
    penalty_share,
    ps_bins,
    rmsse,
    run_pipeline,
    simulate,
    softmax,
    solve,
    student_t,
    trimmed_mean,
    variants,
    winsorized_mean,
)

__all__ = [
    "InputError",
    "RefcastError",
    "ccr_prior",
    "ccr_raw_weights",
    "closed_form_identity_l2",
    "delta_rmsse",
    "objective",
    "penalty_share",
    "ps_bins",
    "rmsse",
    "run_pipeline",
    "simulate",
    "softmax",
    "solve",
    "student_t",
    "trimmed_mean",
    "variants",
    "winsorized_mean",
]
