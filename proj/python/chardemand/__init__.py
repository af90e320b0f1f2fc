"""Characteristic-demand asset pricing: simulation, panel estimation,
anomaly decomposition and mean-variance demand."""

from ._core import (
    Error,
    __version__,
    dispersion_closed_form,
    dispersion_monte_carlo,
    estimate,
    gaussian_rank_normalize,
    identity_grid,
    invert_covariance,
    long_short,
    optimal_weights,
    posterior_moments,
    run_cli,
    simulate,
    sorted_split_closed_form,
    sorted_split_monte_carlo,
)

__all__ = [
    "Error",
    "__version__",
    "dispersion_closed_form",
    "dispersion_monte_carlo",
    "estimate",
    "gaussian_rank_normalize",
    "identity_grid",
    "invert_covariance",
    "long_short",
    "optimal_weights",
    "posterior_moments",
    "run_cli",
    "simulate",
    "sorted_split_closed_form",
    "sorted_split_monte_carlo",
]
