"""Sparse (Lasso) estimation of the drift parameter of an ergodic diffusion
dX = -b_theta(X) dt + dW from a discretely sampled path."""

from ._accel import backend_name
from .estimators import (
    SolverConfig,
    SolverResult,
    cross_validate_lambda,
    default_lambda_grid,
    fit_adaptive_lasso,
    fit_lasso,
    fit_mle,
    lambda_max,
    soft_threshold,
)
from .likelihood import (
    LikelihoodEvaluator,
    empirical_bilinear,
    empirical_norm,
    martingale_sup_stat,
    neg_log_likelihood,
    nll_gradient,
    stochastic_term_G,
)
from .models import (
    GeneralLinear,
    LangevinGradient,
    OrnsteinUhlenbeck,
    SineQuadratic,
    drift_eval,
    drift_jacobian,
    h_function,
    monotonicity_probe,
    unvect,
    vect,
)
from .sim import ObservedPath, SimConfig, SimulationDiverged, simulate, subpath

__version__ = "0.1.0"
