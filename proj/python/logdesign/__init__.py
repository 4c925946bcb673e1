"""Logging policy design for IPW off-policy evaluation."""

from ._logdesign import (
    DesignReport,
    Environment,
    IoError,
    McSummary,
    MseBreakdown,
    Policy,
    RewardModel,
    ShrinkageFit,
    builtin_figures,
    closed_form_mse,
    design,
    exact_model,
    fit_shrinkage,
    make_geometric_env,
    make_linear_env,
    make_noisy_model,
    make_policy,
    monte_carlo_mse,
    policy_value,
    reproduce_figure,
    run_config,
    simulate_and_fit_shrinkage,
    sufficiency_threshold,
    uniform_policy,
    worst_case_mse,
)

__all__ = [name for name in dir() if not name.startswith("_")]
