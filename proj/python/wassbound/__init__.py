"""Empirical Wasserstein bounds for MCMC convergence."""

from ._core import (
    AssignmentSolution,
    NumericalError,
    check_cot_gaussian,
    ensemble_bounds,
    estimate_bounds,
    flapjack,
    gibbs_ar1_exact,
    jackknife_variance,
    solve_assignment,
    ula_stationary_cov,
    w2_squared,
    w2_squared_1d,
    w2_squared_gaussian,
)

__all__ = [
    "AssignmentSolution",
    "NumericalError",
    "check_cot_gaussian",
    "ensemble_bounds",
    "estimate_bounds",
    "flapjack",
    "gibbs_ar1_exact",
    "jackknife_variance",
    "solve_assignment",
    "ula_stationary_cov",
    "w2_squared",
    "w2_squared_1d",
    "w2_squared_gaussian",
]
